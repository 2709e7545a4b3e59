"""Observed information, Gaussian posterior draws and percentile intervals."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .copula import kendall_tau
from .exceptions import DomainError, FitDivergenceError, IndefiniteHessianError
from .model import CoefficientVector, Dataset, FitResult, neg_loglik, ratio_loglik
from .optim import fd_hessian

__all__ = [
    "PosteriorSample",
    "CredibleInterval",
    "check_positive_definite",
    "observed_information",
    "posterior_sample",
    "credible_intervals",
    "difference_transforms",
    "tau_transform",
    "predictive_loglik",
    "write_intervals_csv",
]


def check_positive_definite(h):
    """Symmetrize ``h`` and verify it by Cholesky; returns the symmetric matrix."""
    h = 0.5 * (h + h.T)
    try:
        np.linalg.cholesky(h)
    except np.linalg.LinAlgError:
        eig = np.linalg.eigvalsh(h)
        raise IndefiniteHessianError(
            f"observed information is not positive definite (min eigenvalue {eig.min():.3g})",
            eigenvalues=eig, hessian=h) from None
    return h


def observed_information(gamma: CoefficientVector, data: Dataset, step=1e-4):
    """Hessian of the negative log-likelihood in the free (zeta) parameters."""
    q = gamma.n_coef
    mode = gamma.theta_mode

    def f(vec):
        try:
            return neg_loglik(CoefficientVector.from_free(vec, q, mode), data)
        except FitDivergenceError:
            return np.inf

    with np.errstate(invalid="ignore"):
        h = fd_hessian(f, gamma.to_free(), rel_step=step)
    if not np.all(np.isfinite(h)):
        raise IndefiniteHessianError("observed information has non-finite entries", hessian=h)
    return check_positive_definite(h)


@dataclass(frozen=True)
class PosteriorSample:
    """Posterior draws on the natural scale (shapes, not zetas).

    ``center`` is the point estimate in the same layout as each draw.
    """

    draws: np.ndarray
    param_names: tuple
    seed: object
    center: np.ndarray

    def column(self, name):
        return self.draws[:, self.param_names.index(name)]


@dataclass(frozen=True)
class CredibleInterval:
    name: str
    estimate: float
    lower: float
    upper: float
    level: float


def posterior_sample(result: FitResult, m=10000, seed=0):
    """Draw ``m`` parameters from N(gamma_hat, J^-1) on the zeta scale.

    Shapes are back-transformed by ``delta = 1 + exp(zeta)`` so every draw
    satisfies the constraint.
    """
    if result.neg_hessian_inv is None:
        raise IndefiniteHessianError("fit has no positive-definite information matrix")
    if m < 1:
        raise DomainError("m must be positive")
    mean = result.gamma_hat.to_free()
    chol = np.linalg.cholesky(result.neg_hessian_inv)
    rng = np.random.Generator(np.random.Philox(seed))
    free = mean + rng.standard_normal((m, mean.size)) @ chol.T
    draws = free.copy()
    draws[:, -2:] = 1.0 + np.exp(free[:, -2:])
    names = tuple(result.gamma_hat.natural_names(result.covariate_names))
    return PosteriorSample(draws, names, seed, result.gamma_hat.natural_vector())


def difference_transforms(names):
    """``beta_lambda[c] = beta_u[c] - beta_v[c]`` for every covariate ``c``."""
    out = {}
    for nm in names:
        if nm.startswith("beta_u["):
            c = nm[len("beta_u["):-1]
            iu, iv = names.index(nm), names.index(f"beta_v[{c}]")
            out[f"beta_lambda[{c}]"] = lambda d, iu=iu, iv=iv: d[..., iu] - d[..., iv]
    return out


def tau_transform(names, which="beta_theta[0]"):
    """Kendall's tau of the (constant) Frank parameter."""
    j = names.index(which)
    return {"tau": lambda d: kendall_tau(d[..., j])}


def credible_intervals(sample: PosteriorSample, level=0.95, transforms=None):
    """Percentile intervals for every parameter and for derived quantities.

    ``transforms`` maps a name to a function of the draw matrix (applied row
    by row, or to the point estimate vector) returning one value per draw.
    """
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    if sample.draws.shape[0] < 2:
        raise DomainError("need at least two draws")
    # rounding keeps e.g. level 0.95 at exactly the 2.5 / 97.5 percentiles
    pct = np.round([50.0 * (1.0 - level), 50.0 * (1.0 + level)], 10)
    out = []
    for j, name in enumerate(sample.param_names):
        lo, hi = np.percentile(sample.draws[:, j], pct)
        out.append(CredibleInterval(name, float(sample.center[j]), float(lo), float(hi), level))
    for name, fn in (transforms or {}).items():
        vals = np.asarray(fn(sample.draws), dtype=float)
        lo, hi = np.percentile(vals, pct)
        out.append(CredibleInterval(name, float(fn(sample.center)), float(lo), float(hi), level))
    return out


def predictive_loglik(result: FitResult, test: Dataset, scale="joint"):
    """Log-likelihood of held-out data under the fitted model.

    ``scale="joint"`` scores the observed ``(u, v)`` pairs; ``scale="ratio"``
    scores only ``r = u / v`` with the ratio density, which makes the value
    comparable with regression models fitted to ``r`` alone.
    """
    g = result.gamma_hat
    if test.x.shape[1] != g.n_coef:
        raise DomainError("test design does not match the fitted model")
    if scale == "joint":
        return -neg_loglik(g, test)
    if scale == "ratio":
        return float(np.sum(ratio_loglik(g, test.x, test.r)))
    raise DomainError("scale must be 'joint' or 'ratio'")


def write_intervals_csv(intervals, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "estimate", "lower", "upper", "level"])
        for ci in intervals:
            w.writerow([ci.name, repr(ci.estimate), repr(ci.lower), repr(ci.upper), ci.level])
