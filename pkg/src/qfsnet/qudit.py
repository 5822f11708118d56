"""
D-level quantum states (qudits), single-qudit gates and the realization map.

Gates are returned as plain ``(D, D)`` complex ndarrays; states are wrapped in
:class:`QuditState` so that normalization is guaranteed at construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, ZeroStateError

__all__ = [
    "QuditState",
    "make_qudit",
    "basis_state",
    "measure_prob",
    "apply_gate",
    "pauli_x",
    "pauli_z",
    "hadamard_qutrit",
    "hadamard_qudit",
    "rotation_gate",
    "realize",
    "unrealize",
    "phase_encode",
    "logistic",
    "is_unitary",
]


@dataclass(frozen=True)
class QuditState:
    """Unit-norm amplitude vector of a D-level system."""

    amps: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.amps.shape[0])

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


def make_qudit(amps) -> QuditState:
    """Build a qudit from (possibly unnormalized) amplitudes.

    Raises
    ------
    ZeroStateError
        If every amplitude is zero.
    DimensionError
        If fewer than two amplitudes are given.
    """
    a = np.asarray(amps, dtype=np.complex128).reshape(-1)
    if a.size < 2:
        raise DimensionError(f"a qudit needs at least 2 levels, got {a.size}")
    norm = np.linalg.norm(a)
    if norm == 0.0:
        raise ZeroStateError("cannot normalize the all-zero amplitude vector")
    a = a / norm
    a.setflags(write=False)
    return QuditState(a)


def basis_state(k: int, dim: int) -> QuditState:
    _check_dim(dim)
    if not 0 <= k < dim:
        raise IndexError(f"basis index {k} out of range for D={dim}")
    a = np.zeros(dim, dtype=np.complex128)
    a[k] = 1.0
    return make_qudit(a)


def measure_prob(state: QuditState, basis_index: int) -> float:
    """Probability of observing ``state`` in ``|basis_index>``."""
    if not 0 <= basis_index < state.dim:
        raise IndexError(f"basis index {basis_index} out of range for D={state.dim}")
    return float(abs(state.amps[basis_index]) ** 2)


def apply_gate(gate: np.ndarray, state: QuditState) -> QuditState:
    gate = np.asarray(gate)
    if gate.shape != (state.dim, state.dim):
        raise DimensionError(f"gate shape {gate.shape} does not act on D={state.dim}")
    return make_qudit(gate @ state.amps)


def _check_dim(D: int) -> None:
    if int(D) != D or D < 2:
        raise DimensionError(f"qudit dimension must be an integer >= 2, got {D}")


def pauli_x(D: int) -> np.ndarray:
    """Cyclic shift ``|k> -> |k+1 mod D>``."""
    _check_dim(D)
    return np.roll(np.eye(D, dtype=np.complex128), 1, axis=0)


def pauli_z(D: int) -> np.ndarray:
    """Clock operator ``|k> -> theta**k |k>`` with ``theta = exp(2j*pi/D)``."""
    _check_dim(D)
    k = np.arange(D)
    return np.diag(np.exp(2j * np.pi * k / D))


def hadamard_qutrit() -> np.ndarray:
    w = np.exp(2j * np.pi / 3)
    return np.array(
        [[1, 1, 1], [1, w, np.conj(w)], [1, np.conj(w), w]], dtype=np.complex128
    ) / np.sqrt(3)


def hadamard_qudit(D: int) -> np.ndarray:
    """Unitary Fourier matrix, entry ``(i, k) = exp(2j*pi*i*k/D) / sqrt(D)``."""
    _check_dim(D)
    i, k = np.meshgrid(np.arange(D), np.arange(D), indexing="ij")
    # reduce i*k mod D first so large D keeps full phase accuracy
    return np.exp(2j * np.pi * ((i * k) % D) / D) / np.sqrt(D)


def rotation_gate(omega: float) -> np.ndarray:
    """Spin-1 rotation of a qutrit by angle ``omega`` (radians)."""
    if not np.isfinite(omega):
        raise DomainError(f"rotation angle must be finite, got {omega}")
    c, s = np.cos(omega), np.sin(omega)
    r2 = np.sqrt(2.0)
    m = np.array(
        [
            [1 + c, -r2 * s, 1 - c],
            [r2 * s, 2 * c, -r2 * s],
            [1 - c, r2 * s, 1 + c],
        ]
    )
    return (0.5 * m).astype(np.complex128)


def is_unitary(gate: np.ndarray, tol: float = 1e-12) -> bool:
    g = np.asarray(gate)
    err = np.max(np.abs(g @ g.conj().T - np.eye(g.shape[0])))
    return bool(err < tol)


def realize(state: QuditState) -> np.ndarray:
    """Interleave real and imaginary parts: ``(Re a1, Im a1, ..., Re aD, Im aD)``."""
    out = np.empty(2 * state.dim)
    out[0::2] = state.amps.real
    out[1::2] = state.amps.imag
    return out


def unrealize(values) -> QuditState:
    """Inverse of :func:`realize`."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size % 2:
        raise DimensionError("realization vector must have even length")
    return make_qudit(v[0::2] + 1j * v[1::2])


def logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def phase_encode(x: float, D: int = 3, apply_sigmoid: bool = False) -> float:
    """Map a classical input in [0, 1] to a phase angle in [0, 2*pi/D].

    With ``apply_sigmoid`` the input first passes through the logistic
    function; otherwise it is scaled directly.
    """
    _check_dim(D)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"input must lie in [0, 1], got {x}")
    f = logistic(x) if apply_sigmoid else x
    return float(2 * np.pi / D * f)
