"""
Context-sensitive activation schemes.

Each scheme maps an 8-neighborhood of memberships to the effective
activation phase multiplier ``gamma``. All four collapse to the plain
neighborhood sum when the neighborhood is homogeneous.
"""

from __future__ import annotations

import numpy as np

__all__ = ["SCHEMES", "scheme_gamma", "raw_gamma"]

SCHEMES = ("beta", "chi", "xi", "nu")


def raw_gamma(neigh) -> np.ndarray:
    """Plain neighborhood sum over the trailing axis of length 8."""
    neigh = np.asarray(neigh, dtype=float)
    acc = neigh[..., 0]
    for k in range(1, neigh.shape[-1]):
        acc = acc + neigh[..., k]
    return acc


def _beta(neigh):
    return raw_gamma(neigh)


def _chi(neigh):
    n = neigh.shape[-1]
    s = np.sort(neigh, axis=-1)
    # even-count median: average of the two middle order statistics
    return n * 0.5 * (s[..., n // 2 - 1] + s[..., n // 2])


def _xi(neigh):
    n = neigh.shape[-1]
    total = raw_gamma(neigh)
    mean = total / n
    dev = neigh - mean[..., None]
    var = raw_gamma(dev * dev) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        cv = np.where(mean > 0, np.sqrt(var) / mean, 0.0)
    return total * (1.0 + cv)


def _nu(neigh):
    n = neigh.shape[-1]
    return n * 0.5 * (neigh.max(axis=-1) + neigh.min(axis=-1))


_IMPL = {"beta": _beta, "chi": _chi, "xi": _xi, "nu": _nu}


def scheme_gamma(neigh, scheme: str = "xi"):
    """Effective activation phase for one or many neighborhoods.

    ``neigh`` has shape ``(..., 8)``; the result has shape ``(...)``.

    * ``beta``: neighborhood sum.
    * ``chi``: 8 x median.
    * ``xi``: sum inflated by ``1 + CV`` (coefficient of variation), so
      heterogeneous neighborhoods raise the activation.
    * ``nu``: 8 x midrange.
    """
    try:
        fn = _IMPL[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}") from None
    out = fn(np.asarray(neigh, dtype=float))
    return float(out) if np.ndim(out) == 0 else out
