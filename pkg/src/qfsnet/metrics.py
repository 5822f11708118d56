"""
Segmentation scores and the one-sided two-sample Kolmogorov-Smirnov test.

Masks are compared pixel by pixel against a ground truth. A score whose
denominator is zero (for example PPV of an empty prediction) is reported as
0 and named in ``MetricReport.degenerate`` instead of raising.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySampleError, ShapeError

__all__ = [
    "Confusion",
    "MetricReport",
    "confusion",
    "metrics",
    "evaluate",
    "aggregate",
    "ks_statistic",
    "ks_critical_value",
    "ks_test_one_sided",
    "report_json",
]


@dataclass(frozen=True)
class Confusion:
    trp: int
    trn: int
    flp: int
    fln: int

    @property
    def total(self) -> int:
        return self.trp + self.trn + self.flp + self.fln


@dataclass(frozen=True)
class MetricReport:
    acc: float
    ds: float
    ppv: float
    ss: float
    degenerate: tuple = field(default=())

    def as_dict(self) -> dict:
        return {
            "acc": self.acc,
            "ds": self.ds,
            "ppv": self.ppv,
            "ss": self.ss,
            "degenerate": list(self.degenerate),
        }


def confusion(pred, gt) -> Confusion:
    p = np.asarray(pred, dtype=bool)
    g = np.asarray(gt, dtype=bool)
    if p.shape != g.shape:
        raise ShapeError(f"prediction {p.shape} and ground truth {g.shape} differ in shape")
    trp = int(np.count_nonzero(p & g))
    flp = int(np.count_nonzero(p & ~g))
    fln = int(np.count_nonzero(~p & g))
    return Confusion(trp, p.size - trp - flp - fln, flp, fln)


def _ratio(num, den, name, flags):
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def metrics(c: Confusion) -> MetricReport:
    """Accuracy, Dice similarity, positive predictive value and sensitivity."""
    flags: list = []
    acc = _ratio(c.trp + c.trn, c.total, "acc", flags)
    ds = _ratio(2 * c.trp, 2 * c.trp + c.flp + c.fln, "ds", flags)
    ppv = _ratio(c.trp, c.trp + c.flp, "ppv", flags)
    ss = _ratio(c.trp, c.trp + c.fln, "ss", flags)
    return MetricReport(acc, ds, ppv, ss, tuple(flags))


def evaluate(pred, gt) -> MetricReport:
    return metrics(confusion(pred, gt))


def aggregate(reports) -> dict:
    """Column means of a sequence of reports (empty input gives zeros)."""
    reports = list(reports)
    keys = ("acc", "ds", "ppv", "ss")
    if not reports:
        return {k: 0.0 for k in keys}
    return {k: float(np.mean([getattr(r, k) for r in reports])) for k in keys}


def report_json(per_image: dict) -> str:
    """JSON text with one entry per image plus the aggregate means.

    ``per_image`` maps an image name to its :class:`MetricReport`.
    """
    names = sorted(per_image)
    doc = {
        "images": {n: per_image[n].as_dict() for n in names},
        "mean": aggregate(per_image[n] for n in names),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _sample(x, name):
    a = np.asarray(x, dtype=float).reshape(-1)
    if a.size == 0:
        raise EmptySampleError(f"sample {name} is empty")
    return np.sort(a)


def ks_statistic(a, b) -> float:
    """``D = sup_x (F_a(x) - F_b(x))`` over the pooled sample points.

    The supremum of the difference of two right-continuous step functions is
    attained at one of the jump points, so evaluating both ECDFs on the
    pooled values is exact. D is never negative because both ECDFs vanish
    below the smallest value.
    """
    a = _sample(a, "a")
    b = _sample(b, "b")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(max(0.0, np.max(fa - fb)))


def ks_critical_value(n: int, m: int, alpha: float = 0.05) -> float:
    """Asymptotic one-sided critical value ``sqrt(-ln(alpha)/2) * sqrt((n+m)/(n*m))``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return float(np.sqrt(-np.log(alpha) / 2.0) * np.sqrt((n + m) / (n * m)))


def ks_test_one_sided(a, b, alpha: float = 0.05):
    """One-sided two-sample KS test; returns ``(D, reject)``.

    Rejects the null hypothesis (a is not stochastically smaller than b) when
    D exceeds the asymptotic critical value.

    Raises
    ------
    EmptySampleError
        If either sample is empty.
    """
    d = ks_statistic(a, b)
    n = np.asarray(a).size
    m = np.asarray(b).size
    return d, bool(d > ks_critical_value(n, m, alpha))
