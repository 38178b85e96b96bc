"""Slow, loop-based reference implementations used only by the tests.

Nothing here imports the vectorized code paths under test.
"""

import numpy as np


def lattice_dense(rows, cols, queen=False, torus=False):
    """Binary contiguity from pairwise grid distances."""
    n = rows * cols
    A = np.zeros((n, n))
    for a in range(n):
        ra, ca = divmod(a, cols)
        for b in range(n):
            if a == b:
                continue
            rb, cb = divmod(b, cols)
            dr, dc = abs(ra - rb), abs(ca - cb)
            if torus:
                dr, dc = min(dr, rows - dr), min(dc, cols - dc)
            if queen:
                adjacent = max(dr, dc) == 1
            else:
                adjacent = dr + dc == 1
            if adjacent:
                A[a, b] = 1.0
    return A


def standardize_rows(A):
    return A / A.sum(axis=1, keepdims=True)


def weighted_median(values, weights):
    values = np.asarray(values, float)
    weights = np.asarray(weights, float)
    uniq = np.unique(values)
    for k, v in enumerate(uniq):
        cum = weights[values <= v].sum()
        if abs(cum - 0.5) <= 1e-12 and k + 1 < len(uniq):
            return 0.5 * (v + uniq[k + 1])
        if cum >= 0.5:
            return v
    return uniq[-1]


def lag(W, z):
    n = len(z)
    return np.array([sum(W[i, j] * z[j] for j in range(n)) for i in range(n)])


def robust_lag(W, z):
    out = []
    for i in range(len(z)):
        nb = np.flatnonzero(W[i])
        out.append(weighted_median(z[nb], W[i, nb]))
    return np.array(out)


def mad(x):
    x = np.asarray(x, float)
    return float(np.median(np.abs(x - np.median(x))))


def gk(x, y, S=mad):
    a, b = 1 / S(x), 1 / S(y)
    p, m = S(a * x + b * y) ** 2, S(a * x - b * y) ** 2
    return (p - m) / (p + m)


def all_measures(W, z):
    """All eight statistics by direct summation."""
    n = len(z)
    L, RL = lag(W, z), robust_lag(W, z)
    zz = sum(v * v for v in z)
    tr = sum(W[i, j] * W[j, i] for i in range(n) for j in range(n))
    eta_bar = W.sum() / n
    sq = sum(W[i, j] * (z[i] - z[j]) ** 2 for i in range(n) for j in range(n))
    ab = sum(W[i, j] * abs(z[i] - z[j]) for i in range(n) for j in range(n))
    zWz = sum(z[i] * W[i, j] * z[j] for i in range(n) for j in range(n))
    zWtz = sum(z[i] * W[j, i] * z[j] for i in range(n) for j in range(n))
    return {
        "MC": zWz / zz,
        "GC": (sq / (2 * n * eta_bar)) / (zz / (n - 1)),
        "APLE": 0.5 * (zWtz + zWz) / (L @ L + tr * zz / n),
        "RMC": (z @ RL) / zz,
        "RGC": (ab / (2 * n * eta_bar)) / (np.abs(z).sum() / (n - 1)),
        "RAPLE": 0.5 * (RL @ z + z @ RL) / (RL @ RL + tr * zz / n),
        "GK": gk(z, L),
        "GK2": gk(z, RL),
    }


def autocov(W, z):
    n = len(z)
    return sum(W[i, j] * z[i] * z[j] for i in range(n) for j in range(n)) / n
