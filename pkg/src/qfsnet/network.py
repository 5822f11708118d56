"""
Three-layer qutrit lattice network with self-supervised counter-propagation.

Every neuron is a pixel. A neuron sees its 8-connected neighborhood in the
previous layer through phase-encoded links; the squared imaginary part of the
aggregated state is the observation, which the QSig activation turns into the
neuron's new fuzzy membership. The intermediate and output layers exchange
states each epoch until the interconnection weights stop changing.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .errors import DegenerateHistogramError, DomainError, ShapeError
from .qsig import QSigParams, boundary_set, qsig_multiclass
from .schemes import SCHEMES, scheme_gamma

__all__ = [
    "PHASE_UNIT",
    "GAMMA_NORM",
    "DEFAULT_DELTA",
    "NEIGHBOR_OFFSETS",
    "PhaseFields",
    "NetworkConfig",
    "NetworkState",
    "EpochRecord",
    "RunTrace",
    "validate_field",
    "neighborhood",
    "neighbor_stack",
    "weight_phases",
    "activation_phase",
    "phase_fields",
    "observe",
    "propagate_layer",
    "theta_field",
    "loss",
    "loss_gradient",
    "phase_update",
    "init_state",
    "epoch",
    "run",
    "resolve_qsig",
    "histogram",
]

PHASE_UNIT = 2.0 * np.pi / 3.0
# activation phases are scheme values per neighbor
GAMMA_NORM = 8.0
# rotation offset: 0.75 * 2pi/3 = pi/2 puts a saturated homogeneous
# neighborhood (omega = gamma = 1) on the peak of the sine
DEFAULT_DELTA = 0.75

# (dy, dx), clockwise from north-west
NEIGHBOR_OFFSETS = (
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
)


def validate_field(mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 2 or mu.shape[0] < 3 or mu.shape[1] < 3:
        raise ShapeError(f"a fuzzy field must be 2-D and at least 3x3, got {mu.shape}")
    if not np.all(np.isfinite(mu)) or mu.min() < 0.0 or mu.max() > 1.0:
        raise DomainError("memberships must lie in [0, 1]")
    return mu


def _reflect(i: int, n: int) -> int:
    if i < 0:
        return -i
    if i >= n:
        return 2 * (n - 1) - i
    return i


def neighborhood(field_, x: int, y: int) -> np.ndarray:
    """The 8 neighbors of pixel ``(x, y)`` (column, row), mirrored at borders."""
    mu = np.asarray(field_, dtype=float)
    h, w = mu.shape
    if not (0 <= x < w and 0 <= y < h):
        raise IndexError(f"pixel ({x}, {y}) outside a {w}x{h} field")
    return np.array([mu[_reflect(y + dy, h), _reflect(x + dx, w)] for dy, dx in NEIGHBOR_OFFSETS])


def neighbor_stack(mu: np.ndarray) -> np.ndarray:
    """All neighborhoods at once, shape ``(H, W, 8)``."""
    h, w = mu.shape
    p = np.pad(mu, 1, mode="reflect")
    return np.stack([p[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w] for dy, dx in NEIGHBOR_OFFSETS], axis=-1)


@dataclass(frozen=True)
class PhaseFields:
    """Per-link weight phases ``omega`` (H, W, 8) and activation phases ``gamma`` (H, W).

    Both are multipliers of the qutrit phase unit 2*pi/3. ``gamma`` is the
    scheme activation divided by the neighborhood size, so it lives on the
    same [0, 1]-ish scale as the memberships that set ``omega``.
    """

    omega: np.ndarray
    gamma: np.ndarray

    @property
    def shape(self):
        return self.gamma.shape


def weight_phases(mu) -> np.ndarray:
    """``omega_ik = 1 - (mu_i - mu_ik)`` for every pixel and neighbor."""
    mu = np.asarray(mu, dtype=float)
    return 1.0 - (mu[..., None] - neighbor_stack(mu))


def activation_phase(neigh, scheme: str = "xi"):
    """Scheme activation of a neighborhood; the plain sum for ``beta``."""
    return scheme_gamma(neigh, scheme)


def phase_fields(mu, scheme: str = "xi", context=None) -> PhaseFields:
    """Link phases of a layer transition whose source holds ``mu``.

    ``omega`` always comes from the source memberships. ``gamma`` is read
    from the neighborhoods of ``context`` (default: the source itself) and
    scaled by ``1 / GAMMA_NORM``.
    """
    mu = np.asarray(mu, dtype=float)
    ctx = mu if context is None else np.asarray(context, dtype=float)
    if ctx.shape != mu.shape:
        raise ShapeError(f"context field {ctx.shape} does not match source {mu.shape}")
    omega = 1.0 - (mu[..., None] - neighbor_stack(mu))
    gamma = np.asarray(scheme_gamma(neighbor_stack(ctx), scheme)) / GAMMA_NORM
    return PhaseFields(omega=omega, gamma=gamma)


def _observe_block(nb, omega, gamma, delta):
    im = np.zeros(gamma.shape)
    q_n = np.zeros(gamma.shape)
    for k in range(nb.shape[-1]):
        im = im + nb[..., k] * np.sin(PHASE_UNIT * (omega[..., k] - gamma + delta))
        q_n = q_n + nb[..., k]
    return im * im, q_n


def _partition(order: np.ndarray, workers: int):
    return [c for c in np.array_split(order, max(1, workers)) if c.size]


def _map_chunks(fn, chunks, workers):
    if workers <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


def observe(src, phases: PhaseFields, delta: float = DEFAULT_DELTA, *, order=None, workers: int = 1):
    """Squared imaginary part of each neuron's aggregated state, and ``Q_N``.

    ``z_k = sum_i mu_{k,i} * exp(j * 2pi/3 * (omega_{k,i} - gamma_k + delta))``;
    returns ``(|Im z|**2, sum_i mu_{k,i})`` as (H, W) arrays.
    """
    src = np.asarray(src, dtype=float)
    if phases.omega.shape != src.shape + (8,) or phases.gamma.shape != src.shape:
        raise ShapeError(
            f"phase fields {phases.gamma.shape} do not match source field {src.shape}"
        )
    n = src.size
    nb = neighbor_stack(src).reshape(n, 8)
    om = phases.omega.reshape(n, 8)
    ga = phases.gamma.reshape(n)
    order = np.arange(n) if order is None else np.asarray(order)
    o = np.empty(n)
    q = np.empty(n)

    def block(idx):
        bo, bq = _observe_block(nb[idx], om[idx], ga[idx], delta)
        return idx, bo, bq

    for idx, bo, bq in _map_chunks(block, _partition(order, workers), workers):
        o[idx] = bo
        q[idx] = bq
    return o.reshape(src.shape), q.reshape(src.shape)


def propagate_layer(
    src,
    phases: PhaseFields,
    qsig: QSigParams,
    delta: float = DEFAULT_DELTA,
    *,
    order=None,
    workers: int = 1,
) -> np.ndarray:
    """One layer transition: observation, max-normalization, QSig activation.

    All reads come from ``src`` and all writes go to a fresh array, so the
    result does not depend on ``order`` (a pixel permutation) or on the
    number of ``workers`` sharing the pixel map.
    """
    o, q_n = observe(src, phases, delta, order=order, workers=workers)
    peak = o.max()
    x = o / peak if peak > 0 else np.zeros_like(o)
    n = o.size
    xf, qf = x.reshape(n), q_n.reshape(n)
    order = np.arange(n) if order is None else np.asarray(order)
    out = np.empty(n)

    def block(idx):
        return idx, qsig_multiclass(xf[idx], qsig, qf[idx])

    for idx, vals in _map_chunks(block, _partition(order, workers), workers):
        out[idx] = vals
    return out.reshape(o.shape)


def theta_field(phases: PhaseFields) -> np.ndarray:
    """True interconnection weights ``sin(2pi/3 * (omega - gamma))**2``."""
    phi = PHASE_UNIT * (phases.omega - phases.gamma[..., None])
    return np.sin(phi) ** 2


def loss(theta_prev, theta_next) -> float:
    """Mean over pixels of the summed squared change of the 8 link weights."""
    a = np.asarray(theta_prev, dtype=float)
    b = np.asarray(theta_next, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"theta fields differ in shape: {a.shape} vs {b.shape}")
    d = b - a
    per_pixel = np.sum(d * d, axis=-1)
    return float(per_pixel.sum() / per_pixel.size)


def loss_gradient(phases: PhaseFields, theta_prev):
    """Analytic ``(d zeta / d omega, d zeta / d gamma)`` with ``theta_prev`` held fixed."""
    theta_prev = np.asarray(theta_prev, dtype=float)
    phi = PHASE_UNIT * (phases.omega - phases.gamma[..., None])
    s, c = np.sin(phi), np.cos(phi)
    theta = s * s
    if theta.shape != theta_prev.shape:
        raise ShapeError(f"theta fields differ in shape: {theta_prev.shape} vs {theta.shape}")
    n_pix = phases.gamma.size
    dtheta_domega = 2.0 * PHASE_UNIT * s * c
    common = (2.0 / n_pix) * (theta - theta_prev) * dtheta_domega
    return common, -np.sum(common, axis=-1)


def _signed_root(v, t):
    return np.sign(v) * np.abs(v) ** (1.0 / t)


def phase_update(phases: PhaseFields, grads, mu, zeta: float, t_exponent: int = 3) -> PhaseFields:
    """Self-supervised phase correction driven by the loss and its gradient.

    ``d_omega = -sigma_ik * sgn(g) * |g * zeta|**(1/t)`` with learning rate
    ``sigma_ik = mu_i - mu_ik``; ``d_gamma`` uses ``sigma_i = mu_i``.
    """
    if t_exponent <= 2:
        raise DomainError(f"root exponent t must exceed 2, got {t_exponent}")
    g_omega, g_gamma = grads
    mu = np.asarray(mu, dtype=float)
    sigma_link = mu[..., None] - neighbor_stack(mu)
    d_omega = -sigma_link * _signed_root(g_omega * zeta, t_exponent)
    d_gamma = -mu * _signed_root(g_gamma * zeta, t_exponent)
    return PhaseFields(omega=phases.omega + d_omega, gamma=phases.gamma + d_gamma)


def histogram(mu, n_bins: int = 256) -> np.ndarray:
    """Pixel counts on ``n_bins`` equal bins over [0, 1]."""
    counts, _ = np.histogram(np.asarray(mu, dtype=float), bins=n_bins, range=(0.0, 1.0))
    return counts


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("QFSNET_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class NetworkConfig:
    """Run configuration.

    ``boundary_set`` names the class partition computed from the input
    histogram (``None`` keeps ``qsig.boundaries`` as given). ``delta`` is the
    per-layer rotation offset, in phase units. ``seed`` is recorded for
    provenance only: the update itself has no random component.
    """

    qsig: QSigParams = field(default_factory=QSigParams)
    scheme: str = "xi"
    boundary_set: str | None = "S2"
    max_epochs: int = 100
    tolerance: float = 1e-6
    update_mode: Literal["recompute", "gradient"] = "recompute"
    t_exponent: int = 3
    seed: int = 0
    delta: float = DEFAULT_DELTA
    n_bins: int = 256
    workers: int = field(default_factory=_default_threads)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.tolerance <= 0:
            raise DomainError("tolerance must be positive")
        if self.max_epochs < 1:
            raise DomainError("max_epochs must be at least 1")
        if self.t_exponent < 3 or int(self.t_exponent) != self.t_exponent:
            raise DomainError("t_exponent must be an integer >= 3")
        if self.update_mode not in ("recompute", "gradient"):
            raise DomainError(f"unknown update mode {self.update_mode!r}")


@dataclass
class NetworkState:
    """Layer memberships and link phases carried between epochs.

    ``intermediate`` holds the counter-propagated intermediate layer, which
    supplies the activation context of the next forward pass.
    """

    input: np.ndarray
    intermediate: np.ndarray
    output: np.ndarray
    inp: PhaseFields
    fwd: PhaseFields
    ctr: PhaseFields
    theta_fwd: np.ndarray
    theta_ctr: np.ndarray
    theta_fwd_prev: np.ndarray
    theta_ctr_prev: np.ndarray
    zeta_fwd: float = 0.0
    zeta_ctr: float = 0.0
    index: int = 0


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    max_delta: float
    ms: float


@dataclass
class RunTrace:
    records: list = field(default_factory=list)
    status: str = "max_epochs"
    boundaries: np.ndarray | None = None

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    def to_csv(self, path, include_ms: bool = True) -> None:
        cols = ["epoch", "loss", "max_delta"] + (["ms"] if include_ms else [])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in self.records:
                row = [r.epoch, repr(r.loss), repr(r.max_delta)]
                if include_ms:
                    row.append(f"{r.ms:.3f}")
                w.writerow(row)

    def to_gnuplot(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# epoch loss max_delta\n")
            for r in self.records:
                fh.write(f"{r.epoch} {r.loss!r} {r.max_delta!r}\n")


def init_state(image, cfg: NetworkConfig) -> NetworkState:
    """Input layer holds the image; the other layers start as copies."""
    mu = validate_field(image)
    ph = phase_fields(mu, cfg.scheme)
    th = theta_field(ph)
    return NetworkState(
        input=mu,
        intermediate=mu.copy(),
        output=mu.copy(),
        inp=ph,
        fwd=ph,
        ctr=ph,
        theta_fwd=th,
        theta_ctr=th,
        theta_fwd_prev=th,
        theta_ctr_prev=th,
    )


def _corrected(current: PhaseFields, theta_prev, mu, zeta, cfg) -> PhaseFields:
    grads = loss_gradient(current, theta_prev)
    return phase_update(current, grads, mu, zeta, cfg.t_exponent)


def epoch(state: NetworkState, cfg: NetworkConfig, qsig: QSigParams | None = None, *, order=None, workers=None):
    """Advance one epoch and return ``(new_state, zeta)``.

    The input layer drives the intermediate layer afresh every epoch, the
    intermediate layer drives the output and the output is counter-propagated
    back onto the intermediate layer. In recompute mode the forward link
    takes its activation context from the previous counter-propagated
    intermediate state and the counter link from the new output; in
    gradient mode both links keep their phases and apply the loss-driven
    corrections instead. ``zeta`` compares the counter-link weights before
    and after the epoch.
    """
    qsig = cfg.qsig if qsig is None else qsig
    workers = cfg.workers if workers is None else workers
    kw = dict(order=order, workers=workers)
    first = state.index == 0

    inter = propagate_layer(state.input, state.inp, qsig, cfg.delta, **kw)
    if cfg.update_mode == "recompute" or first:
        fwd = phase_fields(inter, cfg.scheme, context=state.intermediate)
    else:
        fwd = _corrected(state.fwd, state.theta_fwd_prev, inter, state.zeta_fwd, cfg)
    out = propagate_layer(inter, fwd, qsig, cfg.delta, **kw)
    if cfg.update_mode == "recompute" or first:
        ctr = phase_fields(out, cfg.scheme)
    else:
        ctr = _corrected(state.ctr, state.theta_ctr_prev, out, state.zeta_ctr, cfg)
    inter_next = propagate_layer(out, ctr, qsig, cfg.delta, **kw)

    theta_fwd = theta_field(fwd)
    theta_ctr = theta_field(ctr)
    zeta = loss(state.theta_ctr, theta_ctr)
    new = NetworkState(
        input=state.input,
        intermediate=inter_next,
        output=out,
        inp=state.inp,
        fwd=fwd,
        ctr=ctr,
        theta_fwd=theta_fwd,
        theta_ctr=theta_ctr,
        theta_fwd_prev=state.theta_fwd,
        theta_ctr_prev=state.theta_ctr,
        zeta_fwd=loss(state.theta_fwd, theta_fwd),
        zeta_ctr=zeta,
        index=state.index + 1,
    )
    return new, zeta


def resolve_qsig(image, cfg: NetworkConfig) -> QSigParams:
    """Class boundaries for ``image``.

    An image whose histogram cannot be partitioned (a single gray value, or
    fewer occupied bins than classes) falls back to the uniform set S1.
    """
    if cfg.boundary_set is None:
        return cfg.qsig
    try:
        tau = boundary_set(cfg.boundary_set, cfg.qsig.levels, histogram(image, cfg.n_bins))
    except DegenerateHistogramError:
        tau = boundary_set("S1", cfg.qsig.levels)
    return cfg.qsig.with_boundaries(tau)


def run(image, cfg: NetworkConfig | None = None):
    """Iterate epochs until ``zeta < cfg.tolerance`` or ``cfg.max_epochs``.

    Returns the output-layer field and the :class:`RunTrace`.
    """
    cfg = NetworkConfig() if cfg is None else cfg
    state = init_state(image, cfg)
    qsig = resolve_qsig(state.input, cfg)
    trace = RunTrace(boundaries=qsig.boundaries)
    prev_out = state.output
    for _ in range(cfg.max_epochs):
        t0 = time.perf_counter()
        state, zeta = epoch(state, cfg, qsig)
        ms = 1e3 * (time.perf_counter() - t0)
        delta = float(np.max(np.abs(state.output - prev_out)))
        prev_out = state.output
        trace.records.append(EpochRecord(state.index, zeta, delta, ms))
        if zeta < cfg.tolerance:
            trace.status = "converged"
            break
    return state.output, trace
