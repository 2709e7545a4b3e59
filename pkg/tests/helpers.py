"""Shared test utilities."""
import numpy as np


def ks_upper_bound(samples, cdf, grid_size=2000):
    """Upper bound on sup |F_n - F| using ``cdf`` at a subset of order statistics.

    Between two evaluated order statistics both F_n and F are monotone, so
    the deviation is bounded by the bracket endpoints.  The slack is about
    one grid cell of probability (1 / grid_size).
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    idx = np.unique(np.linspace(0, n - 1, grid_size).astype(int))
    f = np.asarray(cdf(x[idx]), dtype=float)
    above = idx[1:] / n - f[:-1]             # F_n(x) <= idx_{j+1}/n, F(x) >= F_j
    below = f[1:] - (idx[:-1] + 1) / n       # F(x) <= F_{j+1}, F_n(x) >= (idx_j+1)/n
    return float(max(above.max(), below.max(), f[0], 1.0 - f[-1]))


def ks_at_points(samples, cdf, grid_size=2000):
    """Lower bound: the exact deviation at the evaluated order statistics."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    idx = np.unique(np.linspace(0, n - 1, grid_size).astype(int))
    f = np.asarray(cdf(x[idx]), dtype=float)
    return float(max(np.max((idx + 1) / n - f), np.max(f - idx / n)))
