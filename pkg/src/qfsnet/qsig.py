"""
Adaptive multi-class quantum sigmoid (QSig) activation and class-boundary sets.

The multi-class activation is a superposition of ``L`` shifted sigmoids

    QSig_R(x) = sum_v 1 / (kappa_v + exp(-lam * (h*s*x - s*c_v - eta)))

with ``kappa_v = Q_N / (tau_v - tau_{v-1})``, ``s`` the gray-level scale
and ``c_v`` the step position of class ``v``. Inputs ``x`` are normalized to
[0, 1] and multiplied by ``s`` (255 by default) so the steepness ``lam`` is
expressed per gray level. The raw sum is divided by its supremum
``sum_v 1/kappa_v = 1/Q_N`` so outputs are memberships in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import BoundaryError, DegenerateHistogramError, DomainError

__all__ = [
    "QSigParams",
    "qsig_single",
    "kappa_for_class",
    "step_positions",
    "qsig_multiclass",
    "count_plateaus",
    "boundary_set",
    "uniform_boundaries",
    "BOUNDARY_SETS",
    "DEFAULT_LAMBDA",
    "LAMBDA_SWEEP",
]

DEFAULT_LAMBDA = 0.239
LAMBDA_SWEEP = tuple(round(0.230 + 0.001 * i, 3) for i in range(11))
BOUNDARY_SETS = ("S1", "S2", "S3", "S4")

# exp() overflows past ~709
_EXP_CLIP = 700.0


def uniform_boundaries(levels: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, levels + 1)


@dataclass(frozen=True)
class QSigParams:
    """Configuration of the multi-class activation.

    ``boundaries`` holds the ``L + 1`` class responses ``tau_0 .. tau_L`` on
    the normalized [0, 1] range; ``eta`` is expressed in gray levels.
    ``shift`` selects the step placement: ``"boundary"`` puts step ``v`` at
    ``tau_{v-1}``; ``"centered"`` uses ``(v - (L+1)/2) * tau_{v-1}``.
    """

    levels: int = 8
    lam: float = DEFAULT_LAMBDA
    h: float = 1.0
    eta: float = 0.0
    boundaries: np.ndarray = field(default=None)  # type: ignore[assignment]
    scale: float = 255.0
    shift: Literal["boundary", "centered"] = "boundary"

    def __post_init__(self):
        if self.boundaries is None:
            object.__setattr__(self, "boundaries", uniform_boundaries(self.levels))
        tau = np.asarray(self.boundaries, dtype=float)
        object.__setattr__(self, "boundaries", tau)
        if int(self.levels) != self.levels or self.levels < 2:
            raise BoundaryError(f"levels must be an integer >= 2, got {self.levels}")
        if tau.shape != (self.levels + 1,):
            raise BoundaryError(
                f"expected {self.levels + 1} boundaries for L={self.levels}, got {tau.size}"
            )
        if np.any(np.diff(tau) <= 0):
            raise BoundaryError("class boundaries must be strictly increasing")
        if abs(tau[0]) > 1e-12 or abs(tau[-1] - 1.0) > 1e-12:
            raise BoundaryError("class boundaries must span [0, 1]")
        if not (self.lam > 0 and self.h > 0 and self.scale > 0):
            raise DomainError("lam, h and scale must be positive")
        if self.eta < 0:
            raise DomainError("eta must be non-negative")
        if self.shift not in ("boundary", "centered"):
            raise DomainError(f"unknown step placement {self.shift!r}")

    def with_boundaries(self, tau) -> "QSigParams":
        tau = np.asarray(tau, dtype=float)
        return QSigParams(
            levels=tau.size - 1,
            lam=self.lam,
            h=self.h,
            eta=self.eta,
            boundaries=tau,
            scale=self.scale,
            shift=self.shift,
        )


def qsig_single(x: float, params: QSigParams, kappa: float) -> float:
    """Single-class sigmoid ``1 / (kappa + exp(-lam*(x*h - eta)))``."""
    if not np.isfinite(x):
        raise DomainError(f"QSig input must be finite, got {x}")
    if kappa <= 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    arg = min(-params.lam * (x * params.h - params.eta), _EXP_CLIP)
    return 1.0 / (kappa + np.exp(arg))


def kappa_for_class(q_n: float, tau_hi: float, tau_lo: float) -> float:
    if tau_hi <= tau_lo:
        raise BoundaryError(f"need tau_hi > tau_lo, got {tau_hi} <= {tau_lo}")
    if q_n <= 0:
        raise DomainError(f"neighborhood sum Q_N must be positive, got {q_n}")
    return q_n / (tau_hi - tau_lo)


def step_positions(params: QSigParams) -> np.ndarray:
    """Normalized input position of each of the ``L`` sigmoid steps."""
    tau = params.boundaries
    lower = tau[:-1]
    if params.shift == "boundary":
        return lower.copy()
    v = np.arange(1, params.levels + 1)
    return (v - (params.levels + 1) / 2.0) * lower


def qsig_multiclass(x, params: QSigParams, q_n):
    """Normalized multi-class activation.

    ``x`` and ``q_n`` broadcast against each other. Each term
    ``1/(kappa_v + e_v)`` is multiplied by the supremum inverse ``Q_N`` in
    the rearranged form ``gap_v*Q_N / (Q_N + gap_v*e_v)``, which stays
    finite as ``Q_N -> 0`` (the activation then tends to zero).
    """
    x = np.asarray(x, dtype=float)
    q_n = np.asarray(q_n, dtype=float)
    if np.any(q_n < 0):
        raise DomainError("neighborhood sum Q_N must be non-negative")
    gaps = np.diff(params.boundaries)
    centers = step_positions(params)
    s = params.scale
    u = params.h * s * x
    out = np.zeros(np.broadcast(x, q_n).shape)
    for gap, c in zip(gaps, centers):
        arg = np.minimum(-params.lam * (u - s * c - params.eta), _EXP_CLIP)
        out = out + gap * q_n / (q_n + gap * np.exp(arg))
    return np.clip(out, 0.0, 1.0)


def count_plateaus(y, flat_tol: float | None = None) -> int:
    """Number of flat runs of a sampled staircase, ignoring the zero floor.

    A sample belongs to a flat run when its forward difference is below
    ``flat_tol`` (default 0.1% of the sampled span). A run sitting at the
    minimum of ``y`` is the floor below the first step and is not counted.
    """
    y = np.asarray(y, dtype=float)
    span = float(y.max() - y.min())
    if span == 0.0:
        return 0
    if flat_tol is None:
        flat_tol = 1e-3 * span
    flat = np.abs(np.diff(y)) < flat_tol
    # run starts: flat sample preceded by a non-flat one (or the first sample)
    starts = np.flatnonzero(flat & ~np.concatenate([[False], flat[:-1]]))
    floor = y.min() + 1e-3 * span
    return int(np.count_nonzero(y[starts] > floor))


def _bin_geometry(n_bins: int):
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return edges, centers


def _check_histogram(hist) -> np.ndarray:
    h = np.asarray(hist, dtype=float).reshape(-1)
    if h.size == 0 or np.any(h < 0) or h.sum() <= 0:
        raise DegenerateHistogramError("histogram must be non-empty with positive mass")
    if np.count_nonzero(h) < 2:
        raise DegenerateHistogramError("histogram holds a single gray value")
    return h


def _make_strict(interior: np.ndarray, eps: float) -> np.ndarray:
    """Push interior boundaries apart so ``0 < b_1 < ... < b_{L-1} < 1``."""
    b = np.clip(np.asarray(interior, dtype=float), eps, 1.0 - eps)
    n = b.size
    for i in range(n):
        lo = eps * (i + 1) if i == 0 else b[i - 1] + eps
        b[i] = max(b[i], lo)
    for i in range(n - 1, -1, -1):
        hi = 1.0 - eps * (n - i) if i == n - 1 else b[i + 1] - eps
        b[i] = min(b[i], hi)
    return b


def _quantile_boundaries(h: np.ndarray, L: int) -> np.ndarray:
    edges, _ = _bin_geometry(h.size)
    cdf = np.concatenate([[0.0], np.cumsum(h)]) / h.sum()
    out = []
    for q in np.arange(1, L) / L:
        j = int(np.searchsorted(cdf[1:], q - 1e-15, side="left"))
        j = min(j, h.size - 1)
        frac = (q - cdf[j]) / (cdf[j + 1] - cdf[j]) if h[j] > 0 else 1.0
        out.append(edges[j] + np.clip(frac, 0.0, 1.0) * (edges[j + 1] - edges[j]))
    return np.array(out)


def _otsu_boundaries(h: np.ndarray, L: int) -> np.ndarray:
    """Exact multi-level Otsu by dynamic programming over occupied bins.

    Maximizing between-class variance equals maximizing
    ``sum_k (sum w*x)_k**2 / (sum w)_k`` over contiguous classes, which is
    additive across classes and therefore solvable exactly by DP.
    """
    _, centers = _bin_geometry(h.size)
    nz = np.flatnonzero(h)
    if nz.size < L:
        raise DegenerateHistogramError(
            f"{nz.size} occupied gray levels cannot form {L} classes"
        )
    w = h[nz]
    x = centers[nz]
    cw = np.concatenate([[0.0], np.cumsum(w)])
    cm = np.concatenate([[0.0], np.cumsum(w * x)])
    n = nz.size

    def score(a, b):
        # class spans occupied bins a..b-1
        return (cm[b] - cm[a]) ** 2 / (cw[b] - cw[a])

    neg = -np.inf
    best = np.full((L + 1, n + 1), neg)
    arg = np.zeros((L + 1, n + 1), dtype=int)
    best[0, 0] = 0.0
    idx = np.arange(n + 1)
    for k in range(1, L + 1):
        for b in range(k, n + 1):
            a = idx[k - 1 : b]
            cand = best[k - 1, a] + score(a, b)
            j = int(np.argmax(cand))
            best[k, b] = cand[j]
            arg[k, b] = a[j]
    cuts = []
    b = n
    for k in range(L, 0, -1):
        a = arg[k, b]
        cuts.append(a)
        b = a
    cuts = sorted(cuts)[1:]
    # a cut before occupied bin c sits midway between bins c-1 and c
    return np.array([0.5 * (x[c - 1] + x[c]) for c in cuts])


def _kmeans_boundaries(h: np.ndarray, L: int, max_iter: int = 300) -> np.ndarray:
    """Weighted 1-D Lloyd iteration on histogram bins, quantile-seeded."""
    _, centers = _bin_geometry(h.size)
    nz = np.flatnonzero(h)
    if nz.size < L:
        raise DegenerateHistogramError(
            f"{nz.size} occupied gray levels cannot form {L} clusters"
        )
    w = h[nz]
    x = centers[nz]
    q = _quantile_boundaries(h, L)
    edges = np.concatenate([[0.0], q, [1.0]])
    means = np.empty(L)
    for k in range(L):
        sel = (x >= edges[k]) & (x <= edges[k + 1])
        means[k] = np.average(x[sel], weights=w[sel]) if sel.any() else 0.5 * (edges[k] + edges[k + 1])
    for _ in range(max_iter):
        mids = 0.5 * (means[:-1] + means[1:])
        lab = np.searchsorted(mids, x, side="right")
        new = means.copy()
        for k in range(L):
            sel = lab == k
            if sel.any():
                new[k] = np.average(x[sel], weights=w[sel])
        new = np.sort(new)
        if np.array_equal(new, means):
            break
        means = new
    return 0.5 * (means[:-1] + means[1:])


def boundary_set(kind: str, levels: int, histogram=None) -> np.ndarray:
    """Class boundaries ``tau_0 = 0 < ... < tau_L = 1`` for a partition kind.

    S1 is the uniform partition, S2 splits the histogram into equal-mass
    classes, S3 is the multi-level Otsu partition and S4 places boundaries
    midway between 1-D k-means centers. ``histogram`` holds pixel counts on
    equal-width bins over [0, 1] and is ignored for S1.
    """
    if int(levels) != levels or levels < 2:
        raise BoundaryError(f"levels must be an integer >= 2, got {levels}")
    kind = kind.upper()
    if kind == "S1":
        return uniform_boundaries(levels)
    if kind not in BOUNDARY_SETS:
        raise BoundaryError(f"unknown boundary set {kind!r}; expected one of {BOUNDARY_SETS}")
    h = _check_histogram(histogram)
    if kind == "S2":
        interior = _quantile_boundaries(h, levels)
    elif kind == "S3":
        interior = _otsu_boundaries(h, levels)
    else:
        interior = _kmeans_boundaries(h, levels)
    eps = 0.25 / (h.size * levels)
    return np.concatenate([[0.0], _make_strict(interior, eps), [1.0]])
