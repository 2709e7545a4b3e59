"""Finite-difference derivatives and a BFGS minimizer.

The likelihoods in this package have no cheap analytic gradient with respect
to the gamma shapes, so everything is driven by central differences.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import line_search
from scipy.optimize._linesearch import LineSearchWarning


def fd_gradient(f, x, rel_step=1e-6):
    """Central-difference gradient with step ``rel_step * max(1, |x_i|)``."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (xp[i] - xm[i])
    return g


def fd_hessian(f, x, rel_step=1e-4, f0=None):
    """Central-difference Hessian from function values.

    Diagonal entries use the three-point second difference, off-diagonal
    entries the four-point mixed difference.  Returns the raw matrix; the two
    triangles are computed independently so asymmetry is visible.
    """
    x = np.asarray(x, dtype=float)
    k = x.size
    h = rel_step * np.maximum(1.0, np.abs(x))
    f0 = f(x) if f0 is None else f0
    hess = np.empty((k, k))

    def shifted(i, si, j=None, sj=0.0):
        xs = x.copy()
        xs[i] += si * h[i]
        if j is not None:
            xs[j] += sj * h[j]
        return f(xs)

    for i in range(k):
        hess[i, i] = (shifted(i, 1) - 2.0 * f0 + shifted(i, -1)) / h[i] ** 2
        for j in range(i + 1, k):
            val = (shifted(i, 1, j, 1) - shifted(i, 1, j, -1)
                   - shifted(i, -1, j, 1) + shifted(i, -1, j, -1)) / (4.0 * h[i] * h[j])
            hess[i, j] = val
            hess[j, i] = val
    return hess


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    converged: bool
    iterations: int
    message: str
    inv_hessian: np.ndarray
    history: list = field(default_factory=list)

    @property
    def gradient_norm(self):
        return float(np.max(np.abs(self.grad)))


def _backtrack(f, x, fx, g, p, shrink=0.5, c1=1e-4, max_halvings=40):
    slope = float(g @ p)
    alpha = 1.0
    for _ in range(max_halvings):
        f_new = f(x + alpha * p)
        if np.isfinite(f_new) and f_new <= fx + c1 * alpha * slope:
            return alpha, f_new
        alpha *= shrink
    return None, fx


def bfgs(f, x0, grad=None, gtol=1e-5, ftol=1e-10, max_iter=500, callback=None):
    """Minimize ``f`` by BFGS with a strong-Wolfe line search.

    Converges when the gradient max-norm drops below ``gtol`` or when the
    relative change of ``f`` stays below ``ftol`` for two consecutive steps.
    Falls back to Armijo backtracking when the Wolfe search fails.
    ``callback(x, fx)`` is called after every accepted step.
    """
    if grad is None:
        grad = lambda z: fd_gradient(f, z)  # noqa: E731
    x = np.asarray(x0, dtype=float).copy()
    k = x.size
    fx = f(x)
    if not np.isfinite(fx):
        raise ValueError("objective is not finite at the starting point")
    g = grad(x)
    inv_h = np.eye(k)
    history = [fx]
    small_steps = 0
    message = "maximum number of iterations reached"
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) < gtol:
            converged, message = True, "gradient norm below tolerance"
            it -= 1
            break
        p = -inv_h @ g
        if not g @ p < 0:
            inv_h = np.eye(k)
            p = -g
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LineSearchWarning)
            warnings.simplefilter("ignore", RuntimeWarning)
            alpha, _, _, f_new, _, g_new = line_search(f, grad, x, p, gfk=g, old_fval=fx, maxiter=30)
        if alpha is None or f_new is None or not np.isfinite(f_new) or f_new > fx:
            alpha, f_new = _backtrack(f, x, fx, g, p)
            if alpha is None:
                # restart once along steepest descent before giving up
                alpha, f_new = _backtrack(f, x, fx, g, -g)
                if alpha is None:
                    message = "line search failed"
                    it -= 1
                    break
                p = -g
            g_new = None
        s = alpha * p
        x_new = x + s
        if g_new is None:
            g_new = grad(x_new)
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            if it == 1:
                inv_h = np.eye(k) * sy / float(y @ y)
            rho = 1.0 / sy
            hy = inv_h @ y
            inv_h = (inv_h - rho * (np.outer(s, hy) + np.outer(hy, s))
                     + (rho * rho * float(y @ hy) + rho) * np.outer(s, s))
        rel = abs(fx - f_new) / max(1.0, abs(fx))
        x, fx, g = x_new, f_new, g_new
        history.append(fx)
        if callback is not None:
            callback(x, fx)
        small_steps = small_steps + 1 if rel < ftol else 0
        if np.max(np.abs(g)) < gtol:
            converged, message = True, "gradient norm below tolerance"
            break
        if small_steps >= 2:
            converged, message = True, "relative objective change below tolerance"
            break
    return MinimizeResult(x=x, fun=float(fx), grad=g, converged=converged, iterations=it,
                          message=message, inv_hessian=inv_h, history=history)
