"""Distribution of R = U / V under the Frank-gamma joint law.

Two evaluation routes are provided.

* Scalar, adaptive: :func:`ratio_pdf_lambda`, :func:`ratio_pdf_full` and
  :func:`ratio_cdf` integrate over the V-probability s in (0, 1) with the
  Gauss-Kronrod integrator from :mod:`fcgam.specfun`.  These are the
  reference implementations.
* Batch: :func:`ratio_logpdf_batch`, :func:`ratio_cdf_batch` and
  :func:`ratio_quantile_batch` evaluate the same integrals for many
  (r, Lambda, theta) rows at once after the change of variables
  s = F_V(exp(t)), using a fixed trapezoid grid in t.  The integrands decay
  exponentially in both directions in t, so the trapezoid rule converges
  geometrically; the tests pin it against the adaptive route.

Rates enter only through Lambda = rate_u / rate_v, and r only through
Lambda * r:  f(r; Lambda) = Lambda * f(Lambda * r; 1).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .copula import EPS_INDEP, GammaMarginal, frank_cond_cdf, frank_log_density
from .exceptions import BracketError, DomainError
from .specfun import DEFAULT_QUADRATURE, QuadratureConfig, integrate_unit_interval

__all__ = [
    "RatioLaw",
    "ratio_pdf_full",
    "ratio_pdf_lambda",
    "ratio_cdf",
    "ratio_quantile",
    "ratio_median",
    "ratio_mean",
    "integrate_positive_axis",
    "gb2_logpdf",
    "gb2_pdf",
    "gb2_cdf",
    "gb2_quantile",
    "ratio_logpdf_batch",
    "ratio_cdf_batch",
    "ratio_quantile_batch",
]


@dataclass(frozen=True)
class RatioLaw:
    """(Lambda, delta_U, delta_V, theta): everything the law of U/V depends on."""

    capital_lambda: float
    shape_u: float
    shape_v: float
    theta: float = 0.0

    def __post_init__(self):
        if not (self.capital_lambda > 0 and np.isfinite(self.capital_lambda)):
            raise DomainError("capital_lambda must be finite and > 0")
        if not (self.shape_u > 0 and self.shape_v > 0):
            raise DomainError("shapes must be > 0")
        if not np.isfinite(self.theta):
            raise DomainError("theta must be finite")

    @classmethod
    def from_marginals(cls, mu: GammaMarginal, mv: GammaMarginal, theta):
        return cls(mu.rate / mv.rate, mu.shape, mv.shape, float(theta))


def _breakpoints(shape_v, rate_v, v_centres):
    # s-locations of the integrand's features: F_V at log-spaced multiples of
    # the characteristic v scales
    v = np.outer(np.atleast_1d(v_centres), np.exp(0.5 * np.arange(-8, 9))).ravel()
    s = special.gammainc(shape_v, rate_v * v)
    return s[(s > 1e-300) & (s < 1.0 - 1e-9)]


def _check_r(r):
    if not (r > 0 and np.isfinite(r)):
        raise DomainError(f"r must be finite and > 0, got {r}")


# -- scalar adaptive route -------------------------------------------------

def ratio_pdf_full(mu: GammaMarginal, mv: GammaMarginal, theta, r,
                   cfg: QuadratureConfig = DEFAULT_QUADRATURE):
    """Density of U/V from the marginals directly (rates kept separate).

    Integrand in s: F_V^{-1}(s) * c(F_U(r F_V^{-1}(s)), s) * f_U(r F_V^{-1}(s)).
    """
    _check_r(r)
    du, dv, lu, lv = mu.shape, mv.shape, mu.rate, mv.rate
    log_norm = du * np.log(lu) - special.gammaln(du)

    def integrand(s):
        v = special.gammaincinv(dv, s) / lv
        u = r * v
        a = special.gammainc(du, lu * u)
        a_c = special.gammaincc(du, lu * u)
        log_fu = log_norm + (du - 1.0) * np.log(u) - lu * u
        return v * np.exp(frank_log_density(theta, a, s, a_c, 1.0 - s) + log_fu)

    # the integrand in v peaks near v = (du + dv) / (lu r + lv)
    pts = _breakpoints(dv, lv, [(du + dv) / (lu * r + lv), du / (lu * r)])
    return integrate_unit_interval(integrand, cfg, points=pts)[0]


def _lambda_integrand(law: RatioLaw, r):
    du, dv, lam, theta = law.shape_u, law.shape_v, law.capital_lambda, law.theta
    const = du * np.log(lam) + (du - 1.0) * np.log(r) - special.gammaln(du)

    def integrand(s):
        g = special.gammaincinv(dv, s)
        x = r * lam * g
        a = special.gammainc(du, x)
        a_c = special.gammaincc(du, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_body = const + du * np.log(g) - x
            out = np.exp(frank_log_density(theta, a, s, a_c, 1.0 - s) + log_body)
        return np.where((g > 0) & np.isfinite(g), out, 0.0)

    return integrand


def ratio_pdf_lambda(law: RatioLaw, r, cfg: QuadratureConfig = DEFAULT_QUADRATURE):
    """Density of R in the (Lambda, delta_U, delta_V, theta) parameterization."""
    _check_r(r)
    z = law.capital_lambda * r
    du, dv = law.shape_u, law.shape_v
    pts = _breakpoints(dv, 1.0, [(du + dv) / (1.0 + z), du / z])
    return integrate_unit_interval(_lambda_integrand(law, r), cfg, points=pts)[0]


def ratio_cdf(law: RatioLaw, r, cfg: QuadratureConfig = DEFAULT_QUADRATURE):
    """P(R <= r) = integral over s of P(U <= r V | F_V(V) = s).

    The integrand is the partial derivative of C(F_U(r F_V^{-1}(s)), s) with
    respect to its second argument, i.e. the Frank conditional CDF.
    """
    _check_r(r)
    du, dv, lam, theta = law.shape_u, law.shape_v, law.capital_lambda, law.theta

    def integrand(s):
        a = special.gammainc(du, r * lam * special.gammaincinv(dv, s))
        return frank_cond_cdf(theta, s, a, 1.0 - s)

    z = lam * r
    pts = _breakpoints(dv, 1.0, [du / z, dv])
    val = integrate_unit_interval(integrand, cfg, points=pts)[0]
    return float(min(max(val, 0.0), 1.0))


def gb2_logpdf(r, capital_lambda, shape_u, shape_v):
    """Closed-form log density of U/V for independent gammas (GB2)."""
    r = np.asarray(r, dtype=float)
    lam = np.asarray(capital_lambda, dtype=float)
    return (shape_u * np.log(lam) + (shape_u - 1.0) * np.log(r)
            - (shape_u + shape_v) * np.log1p(lam * r) - special.betaln(shape_u, shape_v))


def gb2_pdf(law: RatioLaw, r):
    _check_r(r)
    return float(np.exp(gb2_logpdf(r, law.capital_lambda, law.shape_u, law.shape_v)))


def gb2_cdf(r, capital_lambda, shape_u, shape_v):
    z = np.asarray(capital_lambda, dtype=float) * np.asarray(r, dtype=float)
    return special.betainc(shape_u, shape_v, z / (1.0 + z))


def gb2_quantile(p, capital_lambda, shape_u, shape_v):
    q = special.betaincinv(shape_u, shape_v, p)
    return q / (1.0 - q) / np.asarray(capital_lambda, dtype=float)


def ratio_quantile(law: RatioLaw, p, cfg: QuadratureConfig = DEFAULT_QUADRATURE, rtol=1e-8):
    """Smallest r with ratio_cdf(r) >= p, by Brent's method.

    The bracket starts at the independence (GB2) quantile scaled by 1/4 and 4
    and is widened geometrically until it straddles p.
    """
    if not 0.0 < p < 1.0:
        raise DomainError("p must lie in (0, 1)")
    guess = float(gb2_quantile(p, law.capital_lambda, law.shape_u, law.shape_v))
    lo, hi = guess / 4.0, guess * 4.0

    def excess(r):
        return ratio_cdf(law, r, cfg) - p

    f_lo, f_hi = excess(lo), excess(hi)
    for _ in range(60):
        if f_lo < 0 < f_hi:
            break
        if f_lo >= 0:
            hi, f_hi = lo, f_lo
            lo /= 4.0
            f_lo = excess(lo)
        if f_hi <= 0:
            lo, f_lo = hi, f_hi
            hi *= 4.0
            f_hi = excess(hi)
    else:
        raise BracketError(f"could not bracket quantile p={p} for {law}")
    if f_lo > 0 or f_hi < 0:
        raise BracketError("ratio_cdf is not monotone on the bracket")
    return optimize.brentq(excess, lo, hi, xtol=1e-300, rtol=rtol)


def ratio_median(law: RatioLaw, cfg: QuadratureConfig = DEFAULT_QUADRATURE):
    return ratio_quantile(law, 0.5, cfg)


def integrate_positive_axis(f, cfg: QuadratureConfig = DEFAULT_QUADRATURE):
    """Integrate a scalar function over (0, inf) via r = t / (1 - t)."""

    def integrand(t):
        r = t / (1.0 - t)
        jac = 1.0 / (1.0 - t) ** 2
        return np.array([f(ri) for ri in r]) * jac

    return integrate_unit_interval(integrand, cfg)


def ratio_mean(law: RatioLaw, cfg: QuadratureConfig = DEFAULT_QUADRATURE):
    """E(R), finite only for delta_V > 1."""
    if law.shape_v <= 1:
        raise DomainError("the mean of U/V requires shape_v > 1")
    inner = cfg.replace(abs_tol=cfg.abs_tol * 1e-2)
    return integrate_positive_axis(lambda r: r * ratio_pdf_lambda(law, r, inner), cfg)[0]


# -- batch route -----------------------------------------------------------

def _step(theta):
    # for large negative theta the copula density concentrates on a ridge of
    # width ~1/|theta| in log v; the trapezoid step must resolve it
    top = float(np.max(np.abs(theta))) if np.size(theta) else 0.0
    return min(0.05, 0.5 / max(top, 1e-300))


def _grid(shape_sum, step):
    # trapezoid nodes in t = log(v) - log(v_mode); the integrand decays like
    # exp(shape_sum * t) on the left and exp(-shape_sum * e^t) on the right
    left = -(45.0 / shape_sum + 3.0)
    right = np.log1p(45.0 / shape_sum) + 1.5
    return np.arange(left, right + step, step)


def _trapezoid(w, step):
    return step * (w.sum(axis=1) - 0.5 * (w[:, 0] + w[:, -1]))


def _broadcast_rows(*args):
    arrs = np.broadcast_arrays(*[np.asarray(a, dtype=float) for a in args])
    return [a.ravel() for a in arrs], arrs[0].shape


_CHUNK_CELLS = 2_000_000  # rows x nodes evaluated at once (bounds memory)


def _chunks(n_rows, n_nodes):
    size = max(1, _CHUNK_CELLS // max(n_nodes, 1))
    return [slice(i, min(i + size, n_rows)) for i in range(0, n_rows, size)]


def _logpdf_rows(z, du, dv, theta, h):
    t = _grid(du + dv, h)
    # centre each row on the mode of v^(du+dv) exp(-(1+z) v)
    log_v = np.log((du + dv) / (1.0 + z))[:, None] + t[None, :]
    v = np.exp(log_v)
    u = z[:, None] * v
    a, a_c = special.gammainc(du, u), special.gammaincc(du, u)
    b, b_c = special.gammainc(dv, v), special.gammaincc(dv, v)
    log_f = (2.0 * log_v + (du - 1.0) * np.log(u) - u - special.gammaln(du)
             + (dv - 1.0) * log_v - v - special.gammaln(dv)
             + frank_log_density(theta[:, None], a, b, a_c, b_c))
    peak = log_f.max(axis=1, keepdims=True)
    w = np.exp(log_f - peak)
    return np.log(_trapezoid(w, h)) + peak[:, 0]


def ratio_logpdf_batch(r, capital_lambda, shape_u, shape_v, theta):
    """log f_R(r) for many rows; scalars or arrays broadcasting together.

    Shapes must be scalars (the model treats them as global).
    """
    (r, lam, theta), shape = _broadcast_rows(r, capital_lambda, theta)
    if np.any(r <= 0):
        raise DomainError("r must be > 0")
    du, dv = float(shape_u), float(shape_v)
    z = r * lam
    h = _step(theta)
    out = np.empty_like(z)
    for sl in _chunks(z.size, _grid(du + dv, h).size):
        out[sl] = _logpdf_rows(z[sl], du, dv, theta[sl], h)
    return (out + np.log(lam)).reshape(shape)


def _cdf_and_density_rows(z, du, dv, theta, h):
    t = _grid(dv, h)
    log_v = np.log(dv) + t
    v = np.exp(log_v)[None, :]
    u = z[:, None] * v
    a, a_c = special.gammainc(du, u), special.gammaincc(du, u)
    b, b_c = special.gammainc(dv, v), special.gammaincc(dv, v)
    log_fv = dv * np.log(v) - v - special.gammaln(dv)   # v * f_V(v)
    w_cdf = np.exp(log_fv) * frank_cond_cdf(theta[:, None], b, a, b_c)
    cdf = _trapezoid(w_cdf, h)
    # z f(z) = int v f_V(v) * u f_U(u) c(a, b) d(log v) with u = z v
    log_uf = du * np.log(u) - u - special.gammaln(du)
    w_pdf = np.exp(log_fv + log_uf + frank_log_density(theta[:, None], a, b, a_c, b_c))
    return cdf, _trapezoid(w_pdf, h)


def _cdf_and_density_scaled(z, du, dv, theta, h=None):
    """F(z) and z * f(z) for Lambda = 1, row-wise."""
    h = _step(theta) if h is None else h
    cdf, zf = np.empty_like(z), np.empty_like(z)
    for sl in _chunks(z.size, _grid(dv, h).size):
        cdf[sl], zf[sl] = _cdf_and_density_rows(z[sl], du, dv, theta[sl], h)
    return np.clip(cdf, 0.0, 1.0), zf


def ratio_cdf_batch(r, capital_lambda, shape_u, shape_v, theta):
    """P(R <= r) for many rows (see :func:`ratio_logpdf_batch`)."""
    (r, lam, theta), shape = _broadcast_rows(r, capital_lambda, theta)
    if np.any(r <= 0):
        raise DomainError("r must be > 0")
    cdf, _ = _cdf_and_density_scaled(r * lam, float(shape_u), float(shape_v), theta)
    return cdf.reshape(shape)


def ratio_quantile_batch(p, capital_lambda, shape_u, shape_v, theta, tol=1e-12, max_iter=60):
    """Quantiles for many rows by safeguarded Newton in log r.

    Newton steps use the density; any step leaving the current bracket is
    replaced by bisection.  Starts from the independence (GB2) quantile.
    """
    (p, lam, theta), shape = _broadcast_rows(p, capital_lambda, theta)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError("p must lie in (0, 1)")
    du, dv = float(shape_u), float(shape_v)
    x = np.log(gb2_quantile(p, 1.0, du, dv))
    step_h = _step(theta)
    lo = np.full_like(x, -np.inf)
    hi = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        cdf, zf = _cdf_and_density_scaled(np.exp(x[idx]), du, dv, theta[idx], step_h)
        err = cdf - p[idx]
        done = np.abs(err) <= tol
        lo[idx] = np.where(err < 0, x[idx], lo[idx])
        hi[idx] = np.where(err > 0, x[idx], hi[idx])
        step = np.where(zf > 0, err / np.maximum(zf, 1e-300), np.sign(err))
        new = x[idx] - np.clip(step, -2.0, 2.0)
        l, h = lo[idx], hi[idx]
        outside = ~((new > l) & (new < h))
        both = np.isfinite(l) & np.isfinite(h)
        new = np.where(outside & both, 0.5 * (l + h), new)
        new = np.where(outside & ~both & np.isfinite(l), l + 1.0, new)
        new = np.where(outside & ~both & np.isfinite(h), h - 1.0, new)
        tiny = both & (h - l < 1e-14)
        x[idx] = np.where(done | tiny, x[idx], new)
        active[idx] = ~(done | tiny)
    return (np.exp(x) / lam).reshape(shape)
