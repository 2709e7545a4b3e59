"""The FCGAM regression model.

Both gamma rates are log-linear in the covariates and the Frank parameter is
linear (or constant).  The two shapes are global and constrained to exceed 1,
which is enforced by fitting ``zeta = log(delta - 1)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special, stats
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .copula import EPS_INDEP, frank_log_density, theta_from_tau
from .exceptions import ConvergenceError, DomainError, FitDivergenceError, IndefiniteHessianError
from .optim import bfgs, fd_gradient
from .ratio import RatioLaw, ratio_cdf_batch, ratio_logpdf_batch, ratio_quantile_batch
from .specfun import std_normal_quantile

log = logging.getLogger(__name__)

__all__ = [
    "THETA_MODES",
    "Dataset",
    "CoefficientVector",
    "FitOptions",
    "FitResult",
    "design_matrix",
    "predictors",
    "row_loglik",
    "neg_loglik",
    "initial_values",
    "fit",
    "predict_law",
    "predict_quantiles",
    "quantile_residuals",
    "FCGAMRegressor",
]

THETA_MODES = ("constant", "modeled")
ETA_LIMIT = 700.0


def design_matrix(x):
    """Prepend the intercept column to an ``(n, p)`` covariate array."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if not np.all(np.isfinite(x)):
        raise DomainError("covariates contain non-finite values")
    return np.column_stack([np.ones(len(x)), x])


@dataclass(frozen=True)
class Dataset:
    """Observed components ``u``, ``v`` and the design matrix ``x``.

    ``x`` includes the leading intercept column; use :meth:`from_arrays`
    to build one from raw covariates.
    """

    u: np.ndarray
    v: np.ndarray
    x: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 2 or u.ndim != 1 or v.ndim != 1:
            raise DomainError("u and v must be 1-D and x 2-D")
        if not (len(u) == len(v) == len(x)):
            raise DomainError(f"length mismatch: u={len(u)}, v={len(v)}, x={len(x)}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v)) and np.all(np.isfinite(x))):
            raise DomainError("data contain non-finite values")
        if np.any(u <= 0) or np.any(v <= 0):
            raise DomainError("u and v must be strictly positive")
        if not np.all(x[:, 0] == 1.0):
            raise DomainError("first design column must be the intercept (all ones)")
        names = tuple(self.names) or tuple(f"x{j}" for j in range(1, x.shape[1]))
        if len(names) != x.shape[1] - 1:
            raise DomainError("need one name per covariate")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "names", names)

    @classmethod
    def from_arrays(cls, u, v, covariates=None, names=()):
        u = np.asarray(u, dtype=float)
        cov = np.empty((len(u), 0)) if covariates is None else covariates
        return cls(u, v, design_matrix(cov), names)

    @property
    def n(self):
        return len(self.u)

    @property
    def p(self):
        return self.x.shape[1] - 1

    @property
    def r(self):
        return self.u / self.v

    def subset(self, idx):
        return Dataset(self.u[idx], self.v[idx], self.x[idx], self.names)

    def concat(self, other: "Dataset"):
        if other.names != self.names:
            raise DomainError("cannot concatenate datasets with different covariates")
        return Dataset(np.concatenate([self.u, other.u]), np.concatenate([self.v, other.v]),
                       np.vstack([self.x, other.x]), self.names)


@dataclass(frozen=True)
class CoefficientVector:
    """Model coefficients on the natural scale.

    In ``constant`` mode only the intercept of ``beta_theta`` is free and the
    slopes are held at exactly zero.
    """

    beta_u: np.ndarray
    beta_v: np.ndarray
    beta_theta: np.ndarray
    shape_u: float
    shape_v: float
    theta_mode: str = "constant"

    def __post_init__(self):
        bu = np.atleast_1d(np.asarray(self.beta_u, dtype=float))
        bv = np.atleast_1d(np.asarray(self.beta_v, dtype=float))
        bt = np.atleast_1d(np.asarray(self.beta_theta, dtype=float))
        if self.theta_mode not in THETA_MODES:
            raise DomainError(f"theta_mode must be one of {THETA_MODES}")
        if bt.size == 1 and bu.size > 1:
            bt = np.concatenate([bt, np.zeros(bu.size - 1)])
        if not (bu.size == bv.size == bt.size):
            raise DomainError("beta_u, beta_v and beta_theta must have equal length")
        if self.theta_mode == "constant" and np.any(bt[1:] != 0):
            raise DomainError("constant theta mode requires zero theta slopes")
        if not (self.shape_u > 1 and self.shape_v > 1):
            raise DomainError("shapes must exceed 1")
        if not all(np.all(np.isfinite(b)) for b in (bu, bv, bt)):
            raise DomainError("coefficients must be finite")
        object.__setattr__(self, "beta_u", bu)
        object.__setattr__(self, "beta_v", bv)
        object.__setattr__(self, "beta_theta", bt)
        object.__setattr__(self, "shape_u", float(self.shape_u))
        object.__setattr__(self, "shape_v", float(self.shape_v))

    @property
    def n_coef(self):
        return self.beta_u.size

    @property
    def beta_lambda(self):
        return self.beta_u - self.beta_v

    @property
    def n_free(self):
        return 2 * self.n_coef + (self.n_coef if self.theta_mode == "modeled" else 1) + 2

    def to_free(self):
        """Unconstrained vector ``[beta_u, beta_v, beta_theta*, zeta_u, zeta_v]``."""
        bt = self.beta_theta if self.theta_mode == "modeled" else self.beta_theta[:1]
        return np.concatenate([self.beta_u, self.beta_v, bt,
                               [np.log(self.shape_u - 1.0), np.log(self.shape_v - 1.0)]])

    @classmethod
    def from_free(cls, vec, n_coef, theta_mode="constant"):
        vec = np.asarray(vec, dtype=float)
        q = n_coef
        nt = q if theta_mode == "modeled" else 1
        if vec.size != 2 * q + nt + 2:
            raise DomainError(f"free vector has length {vec.size}, expected {2 * q + nt + 2}")
        bt = vec[2 * q:2 * q + nt]
        if theta_mode == "constant":
            bt = np.concatenate([bt, np.zeros(q - 1)])
        zu, zv = vec[-2:]
        if max(zu, zv) > ETA_LIMIT:
            raise FitDivergenceError("shape parameter diverged")
        return cls(vec[:q], vec[q:2 * q], bt, 1.0 + np.exp(zu), 1.0 + np.exp(zv), theta_mode)

    def free_names(self, names=None):
        names = list(names) if names is not None else [f"x{j}" for j in range(1, self.n_coef)]
        cov = ["0", *[n for n in names]]
        out = [f"beta_u[{c}]" for c in cov] + [f"beta_v[{c}]" for c in cov]
        out += [f"beta_theta[{c}]" for c in (cov if self.theta_mode == "modeled" else cov[:1])]
        return out + ["zeta_u", "zeta_v"]

    def natural_names(self, names=None):
        """Labels matching the free vector after back-transformation to shapes."""
        return self.free_names(names)[:-2] + ["shape_u", "shape_v"]

    def natural_vector(self):
        free = self.to_free()
        return np.concatenate([free[:-2], [self.shape_u, self.shape_v]])

    def as_dict(self):
        return {
            "beta_u": self.beta_u.tolist(),
            "beta_v": self.beta_v.tolist(),
            "beta_theta": self.beta_theta.tolist(),
            "shape_u": self.shape_u,
            "shape_v": self.shape_v,
            "theta_mode": self.theta_mode,
        }


def predictors(gamma: CoefficientVector, x):
    """Rates, Frank parameter and rate ratio for design row(s) ``x``.

    Returns
    -------
    lambda_u, lambda_v, theta, capital_lambda : arrays (or floats for a row)
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != gamma.n_coef:
        raise DomainError(f"design row has {x.shape[-1]} columns, expected {gamma.n_coef}")
    eta_u = x @ gamma.beta_u
    eta_v = x @ gamma.beta_v
    theta = x @ gamma.beta_theta
    if np.any(np.abs(eta_u) > ETA_LIMIT) or np.any(np.abs(eta_v) > ETA_LIMIT):
        raise FitDivergenceError("linear predictor exceeds the overflow guard")
    out = (np.exp(eta_u), np.exp(eta_v), theta, np.exp(eta_u - eta_v))
    if x.ndim == 1:
        return tuple(float(o) for o in out)
    return out


def row_loglik(gamma: CoefficientVector, data: Dataset):
    """Per-observation joint log density of ``(u, v)`` given ``x``."""
    du, dv = gamma.shape_u, gamma.shape_v
    eta_u = data.x @ gamma.beta_u
    eta_v = data.x @ gamma.beta_v
    if np.any(np.abs(eta_u) > ETA_LIMIT) or np.any(np.abs(eta_v) > ETA_LIMIT):
        raise FitDivergenceError("linear predictor exceeds the overflow guard")
    theta = data.x @ gamma.beta_theta
    zu = np.exp(eta_u) * data.u
    zv = np.exp(eta_v) * data.v
    lf_u = du * eta_u - special.gammaln(du) + (du - 1.0) * np.log(data.u) - zu
    lf_v = dv * eta_v - special.gammaln(dv) + (dv - 1.0) * np.log(data.v) - zv
    dep = np.abs(theta) >= EPS_INDEP
    out = lf_u + lf_v
    if np.any(dep):
        a, a_c = special.gammainc(du, zu[dep]), special.gammaincc(du, zu[dep])
        b, b_c = special.gammainc(dv, zv[dep]), special.gammaincc(dv, zv[dep])
        with np.errstate(divide="ignore", invalid="ignore"):
            out[dep] += frank_log_density(theta[dep], a, b, a_c, b_c)
    return out


def neg_loglik(gamma: CoefficientVector, data: Dataset):
    """Negative joint log-likelihood; ``+inf`` when a row density underflows."""
    ll = row_loglik(gamma, data)
    bad = ~np.isfinite(ll)
    if np.any(bad):
        log.debug("density underflow in %d rows (first: %d)", bad.sum(), np.flatnonzero(bad)[0])
        return np.inf
    return -float(np.sum(ll))


@dataclass
class FitOptions:
    """Optimizer settings; defaults follow the documented fit contract."""

    gtol: float = 1e-5
    ftol: float = 1e-10
    max_iter: int = 500
    fd_step: float = 1e-6
    hessian_step: float = 1e-4
    compute_hessian: bool = True
    ridge: bool = False


@dataclass(frozen=True)
class FitResult:
    gamma_hat: CoefficientVector
    loglik: float
    neg_hessian_inv: np.ndarray | None
    converged: bool
    iterations: int
    gradient_norm: float
    bic: float
    n_obs: int
    covariate_names: tuple
    message: str = ""
    hessian: np.ndarray | None = None
    history: list = field(default_factory=list, repr=False)

    @property
    def theta_mode(self):
        return self.gamma_hat.theta_mode

    @property
    def param_names(self):
        return self.gamma_hat.free_names(self.covariate_names)

    @property
    def n_params(self):
        return self.gamma_hat.n_free

    @property
    def standard_errors(self):
        """Standard errors on the free (zeta) scale, or ``None``."""
        if self.neg_hessian_inv is None:
            return None
        return np.sqrt(np.diag(self.neg_hessian_inv))


def _irls_gamma(y, x, max_iter=100, tol=1e-10):
    """Gamma GLM with log link by IRLS; returns coefficients and mean."""
    b = np.zeros(x.shape[1])
    b[0] = np.log(np.mean(y))
    for _ in range(max_iter):
        mu = np.exp(x @ b)
        # working response for the log link; weights are constant for gamma
        z = x @ b + (y - mu) / mu
        b_new = np.linalg.lstsq(x, z, rcond=None)[0]
        if np.max(np.abs(b_new - b)) < tol:
            b = b_new
            break
        b = b_new
    return b, np.exp(x @ b)


def _marginal_start(y, x):
    b, mu = _irls_gamma(y, x)
    dof = max(len(y) - x.shape[1], 1)
    dispersion = np.sum(((y - mu) / mu) ** 2) / dof
    shape = max(1.0 / dispersion, 1.05)
    beta = -b
    beta[0] += np.log(shape)
    return beta, shape


def initial_values(data: Dataset, theta_mode="constant"):
    """Starting point from per-component gamma GLMs and Kendall's tau.

    Rates come from log-link gamma GLMs (``log rate = log shape - log mean``)
    with moment shapes clipped above 1.05.  The Frank intercept inverts
    Kendall's tau of the two fitted probability transforms, so covariate
    effects on the rates do not leak into the dependence estimate.
    """
    if np.ptp(data.u) == 0 or np.ptp(data.v) == 0:
        raise DomainError("u and v must not be constant")
    bu, du = _marginal_start(data.u, data.x)
    bv, dv = _marginal_start(data.v, data.x)
    a = special.gammainc(du, np.exp(data.x @ bu) * data.u)
    b = special.gammainc(dv, np.exp(data.x @ bv) * data.v)
    tau = stats.kendalltau(a, b).statistic
    tau = float(np.clip(np.nan_to_num(tau), -0.95, 0.95))
    theta0 = theta_from_tau(tau) if abs(tau) > 1e-6 else 0.0
    bt = np.zeros(data.x.shape[1])
    bt[0] = theta0
    return CoefficientVector(bu, bv, bt, du, dv, theta_mode)


def _objective(data, n_coef, theta_mode):
    def f(vec):
        try:
            return neg_loglik(CoefficientVector.from_free(vec, n_coef, theta_mode), data)
        except (FitDivergenceError, DomainError):
            return np.inf
    return f


def fit(data: Dataset, theta_mode="constant", init: CoefficientVector | None = None,
        opts: FitOptions | None = None):
    """Maximum-likelihood fit by BFGS on the unconstrained parameterization.

    Returns a :class:`FitResult` even when the optimizer stops early; check
    ``converged``.  The observed information and its inverse are attached
    when ``opts.compute_hessian`` is set and the Hessian is positive
    definite (``neg_hessian_inv`` is ``None`` otherwise).

    Raises
    ------
    DomainError
        Rank-deficient design, too few rows, or an invalid ``theta_mode``.
    """
    from .inference import observed_information  # circular at module level

    opts = opts or FitOptions()
    if theta_mode not in THETA_MODES:
        raise DomainError(f"theta_mode must be one of {THETA_MODES}")
    q = data.x.shape[1]
    if np.linalg.matrix_rank(data.x) < q:
        raise DomainError("design matrix is rank deficient")
    if init is None:
        init = initial_values(data, theta_mode)
    elif init.theta_mode != theta_mode:
        bt = init.beta_theta if theta_mode == "modeled" else np.r_[init.beta_theta[0], np.zeros(q - 1)]
        init = replace(init, beta_theta=bt, theta_mode=theta_mode)
    if init.n_coef != q:
        raise DomainError("initial coefficients do not match the design")
    k = init.n_free
    if data.n <= k:
        raise DomainError(f"need more than {k} observations, got {data.n}")

    f = _objective(data, q, theta_mode)
    grad = lambda z: fd_gradient(f, z, opts.fd_step)  # noqa: E731
    res = bfgs(f, init.to_free(), grad=grad, gtol=opts.gtol, ftol=opts.ftol, max_iter=opts.max_iter)
    gamma_hat = CoefficientVector.from_free(res.x, q, theta_mode)
    loglik = -res.fun
    hessian = cov = None
    message = res.message
    if opts.compute_hessian:
        try:
            hessian = observed_information(gamma_hat, data, step=opts.hessian_step)
            cov = np.linalg.inv(hessian)
            cov = 0.5 * (cov + cov.T)
        except IndefiniteHessianError as err:
            hessian = err.hessian
            if opts.ridge and hessian is not None and np.all(np.isfinite(hessian)):
                # lift the smallest eigenvalue to a small multiple of the mean diagonal
                eps = 1e-6 * np.trace(np.abs(hessian)) / k
                eps += max(0.0, -float(np.linalg.eigvalsh(hessian).min()))
                log.warning("indefinite observed information; adding ridge %.3g", eps)
                cov = np.linalg.inv(hessian + eps * np.eye(k))
                cov = 0.5 * (cov + cov.T)
                message += "; ridge-regularized information"
            else:
                message += f"; {err}"
    return FitResult(
        gamma_hat=gamma_hat,
        loglik=loglik,
        neg_hessian_inv=cov,
        converged=res.converged,
        iterations=res.iterations,
        gradient_norm=res.gradient_norm,
        bic=k * np.log(data.n) - 2.0 * loglik,
        n_obs=data.n,
        covariate_names=data.names,
        message=message,
        hessian=hessian,
        history=res.history,
    )


def _as_rows(gamma, x_new):
    x_new = np.asarray(x_new, dtype=float)
    if x_new.shape[-1] != gamma.n_coef:
        raise DomainError(f"x_new has {x_new.shape[-1]} columns, expected {gamma.n_coef} "
                          "(including the intercept)")
    return x_new


def predict_law(result: FitResult, x_new):
    """Fitted :class:`RatioLaw` for one design row (intercept included)."""
    g = result.gamma_hat
    x_new = _as_rows(g, x_new)
    if x_new.ndim != 1:
        raise DomainError("predict_law takes a single design row")
    _, _, theta, lam = predictors(g, x_new)
    return RatioLaw(lam, g.shape_u, g.shape_v, theta)


def predict_quantiles(result: FitResult, x_new, q=0.5):
    """Conditional quantiles of the ratio for every row of ``x_new``."""
    g = result.gamma_hat
    x_new = np.atleast_2d(_as_rows(g, x_new))
    _, _, theta, lam = predictors(g, x_new)
    return ratio_quantile_batch(q, lam, g.shape_u, g.shape_v, theta)


def ratio_loglik(gamma: CoefficientVector, x, r):
    """Per-row log density of the ratio ``r`` given design rows ``x``."""
    _, _, theta, lam = predictors(gamma, np.atleast_2d(x))
    return ratio_logpdf_batch(r, lam, gamma.shape_u, gamma.shape_v, theta)


def quantile_residuals(result: FitResult, data: Dataset):
    """Normal quantile residuals of the observed ratios."""
    g = result.gamma_hat
    _, _, theta, lam = predictors(g, data.x)
    cdf = ratio_cdf_batch(data.r, lam, g.shape_u, g.shape_v, theta)
    return std_normal_quantile(np.clip(cdf, 1e-12, 1.0 - 1e-12))


# --------------------------------------------------------------------------
# scikit-learn estimator
# --------------------------------------------------------------------------

class FCGAMRegressor(BaseEstimator):
    """Ratio regression with a Frank-copula gamma model.

    ``fit`` takes the covariates ``X`` (without intercept) and a two-column
    target ``Y = [u, v]``; the ratio ``u / v`` is the quantity predicted.

    Parameters
    ----------
    theta_mode : {"constant", "modeled"}
        Whether the Frank parameter depends on the covariates.
    max_iter, gtol, ftol : optimizer controls.
    compute_hessian : bool
        Attach the observed information (needed for intervals).

    Attributes
    ----------
    result_ : FitResult
    coef_ : CoefficientVector
    n_features_in_ : int

    Examples
    --------
    >>> import numpy as np
    >>> from fcgam import FCGAMRegressor, simulate_study
    >>> X, Y = simulate_study("1", n=300, theta0=-5, seed=0)
    >>> model = FCGAMRegressor().fit(X, Y)
    >>> medians = model.predict(X[:5])
    """

    def __init__(self, theta_mode="constant", max_iter=500, gtol=1e-5, ftol=1e-10,
                 compute_hessian=True):
        self.theta_mode = theta_mode
        self.max_iter = max_iter
        self.gtol = gtol
        self.ftol = ftol
        self.compute_hessian = compute_hessian

    def _dataset(self, X, Y):
        X, Y = check_X_y(X, Y, multi_output=True, y_numeric=True, ensure_min_features=0)
        if Y.ndim != 2 or Y.shape[1] != 2:
            raise ValueError("Y must have two columns (u, v)")
        names = tuple(getattr(self, "feature_names_in_", ())) or ()
        return Dataset.from_arrays(Y[:, 0], Y[:, 1], X, names)

    def fit(self, X, Y):
        if hasattr(X, "columns"):
            self.feature_names_in_ = np.asarray(X.columns, dtype=object)
        data = self._dataset(X, Y)
        opts = FitOptions(gtol=self.gtol, ftol=self.ftol, max_iter=self.max_iter,
                          compute_hessian=self.compute_hessian)
        self.result_ = fit(data, self.theta_mode, opts=opts)
        if not self.result_.converged:
            log.warning("FCGAM fit did not converge: %s", self.result_.message)
        self.coef_ = self.result_.gamma_hat
        self.n_features_in_ = data.p
        return self

    def _design(self, X):
        check_is_fitted(self, "result_")
        X = check_array(X, ensure_min_features=0)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return design_matrix(X)

    def predict(self, X):
        """Conditional median of ``u / v``."""
        x = self._design(X)
        return predict_quantiles(self.result_, x, 0.5)

    def predict_quantile(self, X, q):
        x = self._design(X)
        return predict_quantiles(self.result_, x, q)

    def predict_law(self, X):
        return [predict_law(self.result_, row) for row in self._design(X)]

    def logpdf(self, X, r):
        """Log density of the ratio ``r`` under the fitted conditional law."""
        x = self._design(X)
        return ratio_loglik(self.coef_, x, np.asarray(r, dtype=float))

    def score(self, X, Y):
        """Mean joint log-likelihood per observation of held-out ``(u, v)``."""
        check_is_fitted(self, "result_")
        data = self._dataset(X, Y)
        return -neg_loglik(self.coef_, data) / data.n

    def quantile_residuals(self, X, Y):
        check_is_fitted(self, "result_")
        return quantile_residuals(self.result_, self._dataset(X, Y))

    def raise_if_not_converged(self):
        check_is_fitted(self, "result_")
        if not self.result_.converged:
            raise ConvergenceError(self.result_.message, self.result_)
        return self
