import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import rosen, rosen_der

from fcgam.optim import bfgs, fd_gradient, fd_hessian

A = np.array([[4.0, 1.0, 0.5], [1.0, 3.0, -0.2], [0.5, -0.2, 2.0]])


def quad(x):
    return 0.5 * x @ A @ x


def test_fd_gradient_quadratic():
    x = np.array([0.3, -1.2, 2.0])
    np.testing.assert_allclose(fd_gradient(quad, x), A @ x, rtol=1e-8)


def test_fd_hessian_recovers_matrix():
    h = fd_hessian(quad, np.array([0.3, -1.2, 2.0]))
    assert np.max(np.abs(h - A)) / np.max(np.abs(A)) < 1e-5
    assert np.max(np.abs(h - h.T)) < 1e-4 * np.max(np.abs(h))


def test_fd_hessian_nonquadratic():
    x = np.array([1.3, 0.7])
    f = lambda z: np.exp(z[0]) * np.sin(z[1]) + z[0] ** 2 * z[1]  # noqa: E731
    exact = np.array([[np.exp(x[0]) * np.sin(x[1]) + 2 * x[1], np.exp(x[0]) * np.cos(x[1]) + 2 * x[0]],
                      [np.exp(x[0]) * np.cos(x[1]) + 2 * x[0], -np.exp(x[0]) * np.sin(x[1])]])
    np.testing.assert_allclose(fd_hessian(f, x), exact, rtol=1e-6, atol=1e-6)


def test_bfgs_quadratic():
    res = bfgs(quad, np.array([3.0, -2.0, 1.0]))
    assert res.converged
    np.testing.assert_allclose(res.x, 0.0, atol=1e-5)
    # the inverse-Hessian approximation approaches A^-1 on a quadratic
    np.testing.assert_allclose(res.inv_hessian, np.linalg.inv(A), atol=0.05)


def test_bfgs_rosenbrock():
    res = bfgs(rosen, np.array([-1.2, 1.0, 0.5]), grad=rosen_der, gtol=1e-8, ftol=0.0)
    assert res.converged and res.message == "gradient norm below tolerance"
    np.testing.assert_allclose(res.x, 1.0, atol=1e-6)


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=4))
def test_history_monotone(x0):
    res = bfgs(rosen, np.array(x0), grad=rosen_der, max_iter=200)
    assert np.all(np.diff(res.history) <= 0)


def test_respects_infinite_region():
    # objective undefined for x <= 0: the line search must back off, not fail
    f = lambda z: np.inf if z[0] <= 0 else z[0] - np.log(z[0])  # noqa: E731
    res = bfgs(f, np.array([5.0]))
    assert res.converged
    assert res.x[0] == pytest.approx(1.0, abs=1e-4)


def test_max_iter_reported():
    res = bfgs(rosen, np.array([-1.2, 1.0]), grad=rosen_der, max_iter=3)
    assert not res.converged and res.iterations == 3


def test_rejects_non_finite_start():
    with pytest.raises(ValueError):
        bfgs(lambda z: np.inf, np.array([1.0]))
