"""
Independent reference implementations used as test oracles.

Everything here is written as plain per-element loops with the standard
library so it shares no code path with the package under test.
"""

import cmath
import math
import statistics

OFFSETS = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)]


def mirror(i, n):
    # reflect without repeating the edge sample: -1 -> 1, n -> n-2
    while i < 0 or i >= n:
        i = -i if i < 0 else 2 * (n - 1) - i
    return i


def neighbors(field, x, y):
    h, w = len(field), len(field[0])
    return [field[mirror(y + dy, h)][mirror(x + dx, w)] for dy, dx in OFFSETS]


def xi_gamma(neigh):
    mean = statistics.fmean(neigh)
    cv = statistics.pstdev(neigh) / mean if mean > 0 else 0.0
    return sum(neigh) * (1.0 + cv)


def gamma_for(neigh, scheme):
    n = len(neigh)
    if scheme == "beta":
        return float(sum(neigh))
    if scheme == "chi":
        return n * statistics.median(neigh)
    if scheme == "nu":
        return n * (max(neigh) + min(neigh)) / 2
    return xi_gamma(neigh)


def qsig_direct(x, tau, lam, q_n, scale=255.0, h=1.0, eta=0.0):
    """Sum of 1/(kappa + exp(...)) terms times the supremum inverse Q_N."""
    total = 0.0
    for v in range(1, len(tau)):
        kappa = q_n / (tau[v] - tau[v - 1])
        arg = -lam * (h * scale * x - scale * tau[v - 1] - eta)
        total += 1.0 / (kappa + math.exp(arg))
    return min(max(total * q_n, 0.0), 1.0)


def observation(field, omega, gamma, delta):
    """Squared imaginary part of the phase-weighted neighborhood sum, per pixel."""
    h, w = len(field), len(field[0])
    out = [[0.0] * w for _ in range(h)]
    unit = 2 * math.pi / 3
    for y in range(h):
        for x in range(w):
            nb = neighbors(field, x, y)
            z = sum(nb[k] * cmath.exp(1j * unit * (omega[y][x][k] - gamma[y][x] + delta)) for k in range(8))
            out[y][x] = z.imag ** 2
    return out


def confusion_loop(pred, gt):
    trp = trn = flp = fln = 0
    for p_row, g_row in zip(pred, gt):
        for p, g in zip(p_row, g_row):
            if p and g:
                trp += 1
            elif p:
                flp += 1
            elif g:
                fln += 1
            else:
                trn += 1
    return trp, trn, flp, fln


def ecdf(sample, x):
    return sum(1 for s in sample if s <= x) / len(sample)


def ks_enumerate(a, b):
    best = 0.0
    for x in list(a) + list(b):
        best = max(best, ecdf(a, x) - ecdf(b, x))
    return best


def otsu_two_class(values, weights):
    """Exhaustive single threshold maximizing between-class variance."""
    best, cut = -1.0, None
    total = sum(weights)
    mean = sum(v * w for v, w in zip(values, weights)) / total
    for i in range(1, len(values)):
        w0 = sum(weights[:i])
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            continue
        m0 = sum(v * w for v, w in zip(values[:i], weights[:i])) / w0
        m1 = sum(v * w for v, w in zip(values[i:], weights[i:])) / w1
        score = w0 * (m0 - mean) ** 2 + w1 * (m1 - mean) ** 2
        if score > best:
            best, cut = score, 0.5 * (values[i - 1] + values[i])
    return cut
