"""Plot-ready tables of ratio densities and medians.

``density_grid`` tabulates pdf and cdf for one law and several Frank
parameters; ``figure1_cells`` and ``median_curves`` sweep the parameter
grids used for the density panels and the median-versus-Lambda curves.
"""
from __future__ import annotations

import itertools

import numpy as np

from .ratio import RatioLaw, ratio_cdf_batch, ratio_logpdf_batch, ratio_quantile, ratio_quantile_batch

__all__ = ["FIG1_RATES", "FIG1_SHAPES", "FIG_THETAS", "density_grid", "figure1_cells",
           "median_curves"]

# Nine panels: three rate pairs crossed with three shape pairs drawn from {1, 2} and {2, 3}.
FIG1_RATES = ((2.0, 1.0), (1.0, 1.0), (1.0, 2.0))
FIG1_SHAPES = ((2.0, 3.0), (2.0, 2.0), (3.0, 2.0))
FIG_THETAS = (-10.0, 1.0, 10.0)


def density_grid(capital_lambda, shape_u, shape_v, thetas=FIG_THETAS, r_max=None, points=401):
    """Rows ``(theta, r, pdf, cdf)`` on an even grid in ``(0, r_max]``.

    The default ``r_max`` is the 0.995 quantile of the widest law.  Also
    returns a ``{theta: median}`` map from the adaptive quantile.
    """
    thetas = [float(t) for t in thetas]
    if r_max is None:
        r_max = float(max(ratio_quantile_batch(0.995, capital_lambda, shape_u, shape_v, t)
                          for t in thetas))
    r = np.linspace(r_max / points, r_max, points)
    rows = []
    medians = {}
    for t in thetas:
        pdf = np.exp(ratio_logpdf_batch(r, capital_lambda, shape_u, shape_v, t))
        cdf = ratio_cdf_batch(r, capital_lambda, shape_u, shape_v, t)
        rows.extend(zip(np.full(r.size, t), r, pdf, cdf))
        medians[t] = ratio_quantile(RatioLaw(capital_lambda, shape_u, shape_v, t), 0.5)
    return np.array(rows), medians


def figure1_cells():
    """Parameter tuples ``(rate_u, rate_v, shape_u, shape_v)`` of the nine panels."""
    return [(lu, lv, du, dv) for (lu, lv), (du, dv) in itertools.product(FIG1_RATES, FIG1_SHAPES)]


def median_curves(lambdas=None, shapes=(2.0, 3.0), thetas=FIG_THETAS):
    """Rows ``(shape_u, shape_v, theta, Lambda, median)``."""
    lambdas = np.linspace(0.1, 4.0, 40) if lambdas is None else np.asarray(lambdas, dtype=float)
    rows = []
    for du, dv in itertools.product(shapes, shapes):
        for t in thetas:
            med = ratio_quantile_batch(0.5, lambdas, du, dv, t)
            rows.extend((du, dv, t, lam, m) for lam, m in zip(lambdas, med))
    return np.array(rows)
