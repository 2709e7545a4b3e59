"""Single-outcome regression models for a positive ratio ``r``.

These are the comparison models: they see only ``r`` and the covariates.
Every model reports log densities *of r* (the log-normal models include
the ``-log r`` Jacobian), so predictive log-likelihoods are comparable with
the copula model's ratio density.
"""
from __future__ import annotations

import numpy as np
from scipy import optimize, special
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import ConvergenceError
from .model import _irls_gamma, design_matrix
from .optim import bfgs
from .ratio import gb2_logpdf, gb2_quantile

__all__ = ["LogNormalRegressor", "LogNormalLSSRegressor", "GammaRegressor",
           "GammaLSSRegressor", "GB2Regressor", "BENCHMARKS", "make_benchmark"]

_LOG_2PI = np.log(2.0 * np.pi)


class _RatioRegressor(BaseEstimator):
    """Shared plumbing: validation, scoring and the fitted design width."""

    def _validate_fit(self, X, r):
        X, r = check_X_y(X, r, y_numeric=True, ensure_min_features=0)
        if np.any(r <= 0):
            raise ValueError("ratio outcomes must be positive")
        self.n_features_in_ = X.shape[1]
        return design_matrix(X), r

    def _design(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, ensure_min_features=0)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return design_matrix(X)

    def _minimize(self, f_and_grad, x0):
        def guarded(z):
            with np.errstate(all="ignore"):
                val, grad = f_and_grad(z)
            if not (np.isfinite(val) and np.all(np.isfinite(grad))):
                return np.inf, np.full_like(z, np.nan)
            return val, grad

        f = lambda z: guarded(z)[0]  # noqa: E731
        g = lambda z: guarded(z)[1]  # noqa: E731
        res = bfgs(f, x0, grad=g, gtol=1e-6, ftol=1e-12, max_iter=1000)
        self.converged_ = res.converged
        self.n_iter_ = res.iterations
        if not res.converged:
            raise ConvergenceError(f"{type(self).__name__}: {res.message}", res)
        return res.x

    def loglik(self, X, r):
        return float(np.sum(self.logpdf(X, r)))

    def score(self, X, r):
        """Mean log density of ``r`` per observation."""
        return self.loglik(X, r) / len(np.asarray(r))


class LogNormalRegressor(_RatioRegressor):
    """Gaussian linear model for ``log r`` (least squares, MLE variance)."""

    def fit(self, X, r):
        x, r = self._validate_fit(X, r)
        z = np.log(r)
        self.coef_ = np.linalg.lstsq(x, z, rcond=None)[0]
        self.sigma_ = float(np.sqrt(np.mean((z - x @ self.coef_) ** 2)))
        self.converged_ = True
        return self

    def _params(self, x):
        return x @ self.coef_, np.full(len(x), self.sigma_)

    def logpdf(self, X, r):
        mu, sigma = self._params(self._design(X))
        z = np.log(np.asarray(r, dtype=float))
        return -0.5 * _LOG_2PI - np.log(sigma) - 0.5 * ((z - mu) / sigma) ** 2 - z

    def predict(self, X):
        """Conditional median ``exp(mu)``."""
        return np.exp(self._params(self._design(X))[0])


class LogNormalLSSRegressor(LogNormalRegressor):
    """Log-normal model with ``log sigma`` linear in the covariates."""

    def fit(self, X, r):
        x, r = self._validate_fit(X, r)
        z = np.log(r)
        q = x.shape[1]
        start = LogNormalRegressor().fit(x[:, 1:], r)
        alpha0 = np.zeros(q)
        alpha0[0] = np.log(start.sigma_)

        def nll(par):
            beta, alpha = par[:q], par[q:]
            mu, ls = x @ beta, x @ alpha
            w = (z - mu) * np.exp(-ls)
            val = np.sum(ls + 0.5 * w ** 2)
            grad = np.concatenate([-(w * np.exp(-ls)) @ x, (1.0 - w ** 2) @ x])
            return val, grad

        par = self._minimize(nll, np.concatenate([start.coef_, alpha0]))
        self.coef_, self.scale_coef_ = par[:q], par[q:]
        return self

    def _params(self, x):
        return x @ self.coef_, np.exp(x @ self.scale_coef_)


def _gamma_logpdf_mean_shape(y, mu, k):
    return k * np.log(k / mu) - special.gammaln(k) + (k - 1.0) * np.log(y) - k * y / mu


class GammaRegressor(_RatioRegressor):
    """Gamma GLM with log link for the mean and a global shape (MLE)."""

    def fit(self, X, r):
        x, r = self._validate_fit(X, r)
        self.coef_, mu = _irls_gamma(r, x, max_iter=200, tol=1e-12)
        # profile score for the shape: log k - digamma(k) = mean(y/mu - 1 - log(y/mu))
        c = float(np.mean(r / mu - 1.0 - np.log(r / mu)))
        g = lambda k: np.log(k) - special.digamma(k) - c  # noqa: E731
        lo, hi = 1e-3, 1.0
        while g(hi) > 0:
            hi *= 2.0
        self.shape_ = float(optimize.brentq(g, lo, hi, xtol=1e-14))
        self.converged_ = True
        return self

    def _params(self, x):
        return np.exp(x @ self.coef_), np.full(len(x), self.shape_)

    def logpdf(self, X, r):
        mu, k = self._params(self._design(X))
        return _gamma_logpdf_mean_shape(np.asarray(r, dtype=float), mu, k)

    def predict(self, X):
        mu, k = self._params(self._design(X))
        return special.gammaincinv(k, 0.5) * mu / k


class GammaLSSRegressor(GammaRegressor):
    """Gamma model with log-linear mean and log-linear scale ``sigma = k^-1/2``."""

    def fit(self, X, r):
        x, r = self._validate_fit(X, r)
        q = x.shape[1]
        start = GammaRegressor().fit(x[:, 1:], r)
        alpha0 = np.zeros(q)
        alpha0[0] = -0.5 * np.log(start.shape_)

        def nll(par):
            beta, alpha = par[:q], par[q:]
            mu = np.exp(x @ beta)
            k = np.exp(-2.0 * (x @ alpha))
            ratio = r / mu
            val = -np.sum(_gamma_logpdf_mean_shape(r, mu, k))
            d_mu = k * (ratio - 1.0)
            d_k = np.log(k * ratio) + 1.0 - special.digamma(k) - ratio
            grad = -np.concatenate([d_mu @ x, (-2.0 * k * d_k) @ x])
            return val, grad

        par = self._minimize(nll, np.concatenate([start.coef_, alpha0]))
        self.coef_, self.scale_coef_ = par[:q], par[q:]
        return self

    def _params(self, x):
        return np.exp(x @ self.coef_), np.exp(-2.0 * (x @ self.scale_coef_))


class GB2Regressor(_RatioRegressor):
    """Ratio of independent gammas: ``log Lambda`` linear, global shapes."""

    def fit(self, X, r):
        x, r = self._validate_fit(X, r)
        q = x.shape[1]
        lr = np.log(r)
        b = np.linalg.lstsq(x, lr, rcond=None)[0]

        def nll(par):
            beta, (wu, wv) = par[:q], par[q:]
            du, dv = np.exp(wu), np.exp(wv)
            eta = x @ beta
            l1 = np.logaddexp(0.0, eta + lr)  # log(1 + Lambda r)
            val = -np.sum(gb2_logpdf(r, np.exp(eta), du, dv))
            frac = np.exp(eta + lr - l1)
            d_eta = du - (du + dv) * frac
            psi = special.digamma(du + dv)
            d_du = np.sum(eta + lr - l1) + len(r) * (psi - special.digamma(du))
            d_dv = np.sum(-l1) + len(r) * (psi - special.digamma(dv))
            grad = -np.concatenate([d_eta @ x, [du * d_du, dv * d_dv]])
            return val, grad

        par = self._minimize(nll, np.concatenate([-b, [np.log(2.0), np.log(2.0)]]))
        self.coef_ = par[:q]
        self.shape_u_, self.shape_v_ = float(np.exp(par[q])), float(np.exp(par[q + 1]))
        return self

    def logpdf(self, X, r):
        lam = np.exp(self._design(X) @ self.coef_)
        return gb2_logpdf(np.asarray(r, dtype=float), lam, self.shape_u_, self.shape_v_)

    def predict(self, X):
        lam = np.exp(self._design(X) @ self.coef_)
        return gb2_quantile(0.5, lam, self.shape_u_, self.shape_v_)


BENCHMARKS = {
    "GB2": GB2Regressor,
    "LN": LogNormalRegressor,
    "LN.LSS": LogNormalLSSRegressor,
    "GA": GammaRegressor,
    "GA.LSS": GammaLSSRegressor,
}


def make_benchmark(kind):
    try:
        return BENCHMARKS[kind.replace("_", ".")]()
    except KeyError:
        raise ValueError(f"unknown benchmark {kind!r}; choose from {sorted(BENCHMARKS)}") from None
