"""
Qutrit-inspired self-supervised image segmentation.

A three-layer lattice of pixel neurons exchanges phase-encoded fuzzy states
until its interconnection weights settle; the output layer is the
segmentation.
"""

from .errors import *  # noqa: F401,F403
from .imaging import PhantomSpec, binarize, disk_cleanup, gen_phantom, normalize, read_pgm, write_pgm
from .metrics import confusion, evaluate, ks_test_one_sided, metrics
from .network import NetworkConfig, RunTrace, epoch, init_state, propagate_layer, run
from .qsig import QSigParams, boundary_set, qsig_multiclass
from .qudit import hadamard_qudit, hadamard_qutrit, make_qudit, measure_prob, rotation_gate
from .schemes import SCHEMES, scheme_gamma

__version__ = "0.1.0"
