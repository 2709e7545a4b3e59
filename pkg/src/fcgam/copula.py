"""Gamma marginals, the Frank copula, Kendall's tau and joint sampling.

All Frank-copula formulas are evaluated for theta > 0 only, in a form whose
terms are all positive (no cancellation, no overflow for any theta).  A
negative parameter is mapped onto the positive case with the reflection

    C_{-t}(a, b) = b - C_t(1 - a, b),

so that density and conditional distribution at (a, b) for -t equal those at
(1 - a, b) for t.  Functions take optional complements ``a_c = 1 - a`` so
callers holding an accurate upper-tail probability can pass it in.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .exceptions import DomainError
from .specfun import DEFAULT_QUADRATURE, debye_like_integral, inv_reg_lower_inc_gamma

__all__ = [
    "EPS_INDEP",
    "GammaMarginal",
    "gamma_logpdf",
    "gamma_pdf",
    "gamma_cdf",
    "gamma_sf",
    "gamma_quantile",
    "frank_cdf",
    "frank_log_density",
    "frank_density",
    "frank_cond_cdf",
    "frank_conditional_inverse",
    "kendall_tau",
    "theta_from_tau",
    "sample_pair",
]

#: Below this |theta| the copula is replaced by exact independence.
EPS_INDEP = 1e-8

_CLAMP = 1e-15


@dataclass(frozen=True)
class GammaMarginal:
    """Gamma law with ``rate`` (lambda) and ``shape`` (delta)."""

    rate: float
    shape: float

    def __post_init__(self):
        if not (self.rate > 0 and np.isfinite(self.rate)):
            raise DomainError(f"rate must be finite and > 0, got {self.rate}")
        if not (self.shape > 0 and np.isfinite(self.shape)):
            raise DomainError(f"shape must be finite and > 0, got {self.shape}")

    @property
    def mean(self):
        return self.shape / self.rate


# -- vectorized gamma helpers (rate parameterization) ----------------------

def gamma_logpdf(x, rate, shape):
    """log density; ``x``, ``rate`` and ``shape`` broadcast."""
    x = np.asarray(x, dtype=float)
    return shape * np.log(rate) - special.gammaln(shape) + (shape - 1.0) * np.log(x) - rate * x


def gamma_pdf(m: GammaMarginal, x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("gamma_pdf requires x > 0")
    out = np.exp(gamma_logpdf(x, m.rate, m.shape))
    return out.item() if out.ndim == 0 else out


def gamma_cdf(m: GammaMarginal, x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("gamma_cdf requires x >= 0")
    out = special.gammainc(m.shape, m.rate * x)
    return out.item() if out.ndim == 0 else out


def gamma_sf(m: GammaMarginal, x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("gamma_sf requires x >= 0")
    out = special.gammaincc(m.shape, m.rate * x)
    return out.item() if out.ndim == 0 else out


def gamma_quantile(m: GammaMarginal, p):
    return np.divide(inv_reg_lower_inc_gamma(m.shape, p), m.rate)


# -- Frank copula ----------------------------------------------------------

def _one_minus_exp(t, x):
    # log(1 - exp(-t x)) for t > 0, x in [0, 1]; -inf at x = 0
    with np.errstate(divide="ignore"):
        return np.log(-np.expm1(-t * x))


def _reflect(theta, a, a_c):
    """Map (theta, a) to (|theta|, a or 1-a) elementwise."""
    theta = np.asarray(theta, dtype=float)
    a = np.asarray(a, dtype=float)
    a_c = 1.0 - a if a_c is None else np.asarray(a_c, dtype=float)
    neg = theta < 0
    return np.abs(theta), np.where(neg, a_c, a), np.where(neg, a, a_c)


def _check_unit(name, x, closed=True):
    x = np.asarray(x, dtype=float)
    bad = (x < 0) | (x > 1) if closed else (x <= 0) | (x >= 1)
    if np.any(bad) or np.any(np.isnan(x)):
        raise DomainError(f"{name} must lie in the unit interval")
    return x


def frank_cdf(theta, a, b):
    """Frank copula C_theta(a, b)."""
    a = _check_unit("a", a)
    b = _check_unit("b", b)
    theta = np.asarray(theta, dtype=float)
    t = np.where(np.abs(theta) < EPS_INDEP, 1.0, theta)
    # C = -1/t * log1p(expm1(-t a) expm1(-t b) / expm1(-t)); fine for |t| <~ 700
    with np.errstate(over="ignore", invalid="ignore"):
        val = -np.log1p(np.expm1(-t * a) * np.expm1(-t * b) / np.expm1(-t)) / t
    val = np.where(np.abs(theta) < EPS_INDEP, a * b, val)
    # exact boundary identities
    val = np.where((a == 0) | (b == 0), 0.0, val)
    val = np.where(b == 1, a, np.where(a == 1, b, val))
    val = np.clip(val, np.maximum(a + b - 1.0, 0.0), np.minimum(a, b))
    return val.item() if val.ndim == 0 else val


def frank_log_density(theta, a, b, a_c=None, b_c=None):
    """Log of the Frank copula density c_theta(a, b).

    Evaluated in log space for every theta; terms that would overflow for
    large |theta| never appear.
    """
    t, a, a_c = _reflect(theta, a, a_c)
    b = np.asarray(b, dtype=float)
    b_c = 1.0 - b if b_c is None else np.asarray(b_c, dtype=float)
    indep = t < EPS_INDEP
    t = np.where(indep, 1.0, t)
    # denominator e^{-ta}(1 - e^{-tb}) + e^{-tb}(1 - e^{-t(1-b)}), all terms >= 0
    log_den = np.logaddexp(-t * a + _one_minus_exp(t, b), -t * b + _one_minus_exp(t, b_c))
    out = np.log(t) + _one_minus_exp(t, 1.0) - t * (a + b) - 2.0 * log_den
    out = np.where(indep, 0.0, out)
    return out.item() if out.ndim == 0 else out


def frank_density(theta, a, b):
    _check_unit("a", a, closed=False)
    _check_unit("b", b, closed=False)
    return np.exp(frank_log_density(theta, a, b))


def frank_cond_cdf(theta, a, b, a_c=None):
    """P(B <= b | A = a) = dC/da (a, b).

    By symmetry of the Frank copula this is also P(A <= b | B = a).
    """
    t, a, a_c = _reflect(theta, a, a_c)
    b = np.asarray(b, dtype=float)
    indep = t < EPS_INDEP
    t = np.where(indep, 1.0, t)
    with np.errstate(invalid="ignore"):
        log_h = _one_minus_exp(t, b) - np.logaddexp(
            -t * (b - a) + _one_minus_exp(t, a), _one_minus_exp(t, a_c))
    out = np.where(indep, b, np.exp(log_h))
    out = np.where(b <= 0, 0.0, np.where(b >= 1, 1.0, out))
    return out.item() if out.ndim == 0 else out


def frank_conditional_inverse(theta, a, w):
    """Solve dC/da (a, b) = w for b (closed form).

    Used to draw B given A = a by inversion of a uniform ``w``.
    """
    a = _check_unit("a", a, closed=False)
    w = _check_unit("w", w, closed=False)
    t, a, _ = _reflect(theta, a, None)
    indep = t < EPS_INDEP
    t = np.where(indep, 1.0, t)
    # e^{-tb} = ((1-w) e^{-ta} + w e^{-t}) / (w + (1-w) e^{-ta})
    log_w, log_1w = np.log(w), np.log1p(-w)
    b = (np.logaddexp(log_w, log_1w - t * a)
         - np.logaddexp(log_1w - t * a, log_w - t)) / t
    b = np.where(indep, w, b)
    b = np.clip(b, _CLAMP, 1.0 - _CLAMP)
    return b.item() if b.ndim == 0 else b


def _kendall_tau_scalar(theta):
    if abs(theta) < EPS_INDEP:
        return 0.0
    if abs(theta) < 1e-4:
        # series tau = t/9 - t^3/900 avoids the 1/t^2 cancellation
        return theta / 9.0 - theta ** 3 / 900.0
    d = debye_like_integral(theta, DEFAULT_QUADRATURE)
    return 1.0 + 4.0 / theta * (d / theta - 1.0)


def kendall_tau(theta):
    """Kendall's tau of the Frank copula; 0 at theta = 0 by continuity."""
    theta = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(theta)):
        raise DomainError("theta must be finite")
    if theta.ndim == 0:
        return _kendall_tau_scalar(float(theta))
    return np.array([_kendall_tau_scalar(float(t)) for t in theta.ravel()]).reshape(theta.shape)


def theta_from_tau(tau):
    """Invert :func:`kendall_tau` by Brent's method."""
    if not -1.0 < tau < 1.0:
        raise DomainError("tau must lie in (-1, 1)")
    if abs(tau) < 1e-12:
        return 0.0
    hi = 1.0
    while abs(_kendall_tau_scalar(np.copysign(hi, tau))) < abs(tau):
        hi *= 2.0
        if hi > 1e4:
            raise DomainError(f"tau={tau} too extreme to invert")
    lo, hi = sorted((np.copysign(1e-6, tau), np.copysign(hi, tau)))
    return optimize.brentq(lambda t: _kendall_tau_scalar(t) - tau, lo, hi, xtol=1e-12)


def sample_pair(mu: GammaMarginal, mv: GammaMarginal, theta, rng: np.random.Generator, size=None):
    """Exact draws of (U, V) with gamma marginals joined by a Frank copula.

    ``theta`` may be an array broadcasting against ``size`` (one parameter
    per draw), and so may the marginals' rates when passed as arrays via
    :func:`sample_pairs`.
    """
    return sample_pairs(mu.rate, mu.shape, mv.rate, mv.shape, theta, rng, size)


def sample_pairs(rate_u, shape_u, rate_v, shape_v, theta, rng, size=None):
    """Array form of :func:`sample_pair` with per-draw rates and theta."""
    if size is None:
        size = np.broadcast(np.asarray(rate_u), np.asarray(rate_v), np.asarray(theta)).shape
    a = np.clip(rng.random(size), _CLAMP, 1.0 - _CLAMP)
    w = np.clip(rng.random(size), _CLAMP, 1.0 - _CLAMP)
    b = frank_conditional_inverse(theta, a, w)
    u = special.gammaincinv(shape_u, a) / rate_u
    v = special.gammaincinv(shape_v, b) / rate_v
    return u, v
