import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from fcgam.copula import GammaMarginal, sample_pairs
from fcgam.exceptions import DomainError
from fcgam.ratio import (RatioLaw, gb2_cdf, gb2_pdf, gb2_quantile, integrate_positive_axis,
                         ratio_cdf, ratio_cdf_batch, ratio_logpdf_batch, ratio_mean, ratio_median,
                         ratio_pdf_full, ratio_pdf_lambda, ratio_quantile, ratio_quantile_batch)
from fcgam.specfun import DEFAULT_QUADRATURE
from helpers import ks_at_points, ks_upper_bound

# (r, rate_u, rate_v, shape_u, shape_v, theta) -> pdf, cdf at 30 digits (tools/oracles.py)
ORACLE = [
    ((0.5, 1, 1, 2, 3, -10), 0.564066108955600323828, 0.435022754343919738867),
    ((1.0, 1, 1, 2, 3, 1), 0.404186704751386449732, 0.707365382607203780831),
    ((2.0, 2, 1, 3, 2, 10), 0.0483570777900002494335, 0.958731924018177218323),
    ((0.7, 0.5, 1, 2, 6, -5), 0.498808037389147952488, 0.558328074644620214931),
    ((3.0, 1, 2, 2, 2, 30), 0.0554314461664684067250, 0.962045655779333902814),
]
MEDIAN_1_2_3_1 = 0.627982647124132249538

PARAM_SETS = [(1.0, 2.0, 3.0, -10.0), (2.0, 3.0, 2.0, -1.0), (0.5, 2.0, 2.0, 1.0),
              (1.0, 2.0, 6.0, 10.0), (0.5, 2.0, 6.0, -5.0), (3.0, 1.5, 4.0, 1.0)]


@pytest.mark.parametrize("args, pdf, cdf", ORACLE)
class TestOracle:
    def test_lambda_route(self, args, pdf, cdf):
        r, lu, lv, du, dv, t = args
        assert ratio_pdf_lambda(RatioLaw(lu / lv, du, dv, t), r) == pytest.approx(pdf, rel=1e-9)

    def test_full_route(self, args, pdf, cdf):
        r, lu, lv, du, dv, t = args
        val = ratio_pdf_full(GammaMarginal(lu, du), GammaMarginal(lv, dv), t, r)
        assert val == pytest.approx(pdf, rel=1e-9)

    def test_cdf(self, args, pdf, cdf):
        r, lu, lv, du, dv, t = args
        assert ratio_cdf(RatioLaw(lu / lv, du, dv, t), r) == pytest.approx(cdf, abs=1e-10)

    def test_batch(self, args, pdf, cdf):
        r, lu, lv, du, dv, t = args
        assert np.exp(ratio_logpdf_batch(r, lu / lv, du, dv, t)) == pytest.approx(pdf, rel=1e-10)
        assert ratio_cdf_batch(r, lu / lv, du, dv, t) == pytest.approx(cdf, abs=1e-11)


class TestRatioLaw:
    def test_validation(self):
        with pytest.raises(DomainError):
            RatioLaw(0.0, 2, 3)
        with pytest.raises(DomainError):
            RatioLaw(1.0, -2, 3)
        with pytest.raises(DomainError):
            ratio_pdf_lambda(RatioLaw(1.0, 2, 3), -1.0)

    def test_from_marginals(self):
        law = RatioLaw.from_marginals(GammaMarginal(4, 2), GammaMarginal(2, 3), 1.5)
        assert law.capital_lambda == 2.0 and law.theta == 1.5


class TestDensity:
    @pytest.mark.parametrize("rates", [(2.0, 1.0), (4.0, 2.0)])
    @pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
    def test_full_matches_lambda_form(self, rates, r):
        mu, mv = GammaMarginal(rates[0], 2.0), GammaMarginal(rates[1], 3.0)
        law = RatioLaw.from_marginals(mu, mv, -4.0)
        assert abs(ratio_pdf_full(mu, mv, -4.0, r) - ratio_pdf_lambda(law, r)) <= 1e-8

    @pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
    def test_scale_invariance(self, c):
        for r in (0.3, 1.0, 4.0):
            base = ratio_pdf_full(GammaMarginal(1.5, 2), GammaMarginal(1.0, 3), 6.0, r)
            scaled = ratio_pdf_full(GammaMarginal(1.5 * c, 2), GammaMarginal(c, 3), 6.0, r)
            assert abs(base - scaled) <= 1e-8

    def test_independence_is_gb2(self):
        for r in (0.5, 1.0, 2.0):
            law = RatioLaw(1.0, 2.0, 3.0, 1e-9)
            assert abs(ratio_pdf_lambda(law, r) - gb2_pdf(law, r)) <= 1e-6
            full = ratio_pdf_full(GammaMarginal(2, 2), GammaMarginal(2, 3), 1e-9, r)
            assert abs(full - gb2_pdf(law, r)) <= 1e-6

    def test_gb2_closed_forms(self):
        assert gb2_pdf(RatioLaw(1.0, 1.0, 1.0), 1.0) == pytest.approx(0.25, rel=1e-15)
        val, _ = integrate_positive_axis(lambda r: gb2_pdf(RatioLaw(1.0, 2.0, 2.0), r),
                                         DEFAULT_QUADRATURE.replace(abs_tol=1e-13, rel_tol=1e-13))
        assert val == pytest.approx(1.0, abs=1e-10)
        # GB2 cdf against scipy's beta-prime law (the ratio of unit-rate gammas)
        r = np.array([0.1, 0.7, 3.0])
        np.testing.assert_allclose(gb2_cdf(r, 2.0, 2.5, 3.5), stats.betaprime.cdf(2.0 * r, 2.5, 3.5),
                                   rtol=1e-12)
        assert gb2_cdf(gb2_quantile(0.3, 2.0, 2.5, 3.5), 2.0, 2.5, 3.5) == pytest.approx(0.3, abs=1e-12)

    def test_normalization(self):
        law = RatioLaw(0.5, 2.0, 6.0, -5.0)
        val, _ = integrate_positive_axis(lambda r: ratio_pdf_lambda(law, r))
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_mode_increases_with_theta(self):
        r = np.linspace(0.01, 3.0, 600)
        modes = [r[np.argmax(np.exp(ratio_logpdf_batch(r, 1.0, 2.0, 3.0, t)))] for t in (-10, 1, 10)]
        assert modes[0] < modes[1] < modes[2]

    def test_lambda_rescaling(self):
        r = np.array([0.2, 1.0, 5.0])
        lhs = ratio_logpdf_batch(r, 2.5, 2.0, 3.0, -3.0)
        rhs = np.log(2.5) + ratio_logpdf_batch(2.5 * r, 1.0, 2.0, 3.0, -3.0)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


class TestCdf:
    def test_limits(self):
        law = RatioLaw(1.0, 2.0, 2.0, 1.0)
        assert ratio_cdf(law, 1e-6) == pytest.approx(0.0, abs=1e-4)
        assert ratio_cdf(law, 1e6) == pytest.approx(1.0, abs=1e-4)

    def test_exchangeable_median(self):
        assert ratio_cdf(RatioLaw(1.0, 2.0, 2.0, 5.0), 1.0) == pytest.approx(0.5, abs=1e-5)

    @pytest.mark.parametrize("lam, du, dv, theta", PARAM_SETS)
    def test_matches_integrated_density(self, lam, du, dv, theta):
        law = RatioLaw(lam, du, dv, theta)
        grid = gb2_quantile(np.linspace(0.05, 0.95, 11), lam, du, dv)
        edges = np.concatenate([[0.0], grid])
        pieces = [integrate.quad(lambda r: ratio_pdf_lambda(law, r), a, b, epsabs=1e-11, epsrel=1e-11,
                                 limit=200)[0] for a, b in zip(edges[:-1], edges[1:])]
        cum = np.cumsum(pieces)
        cdf = np.array([ratio_cdf(law, r) for r in grid])
        assert np.max(np.abs(cdf - cum)) <= 1e-5

    def test_monte_carlo(self, rng):
        u, v = sample_pairs(0.5, 2.0, 1.0, 6.0, -5.0, rng, 100_000)
        cdf = lambda r: ratio_cdf_batch(r, 0.5, 2.0, 6.0, -5.0)  # noqa: E731
        assert ks_upper_bound(u / v, cdf) < 0.01
        # the sample is really from this law and not a neighbour
        assert ks_at_points(u / v, lambda r: ratio_cdf_batch(r, 0.5, 2.0, 6.0, 5.0)) > 0.05


class TestQuantile:
    def test_exchangeable_median(self):
        assert ratio_quantile(RatioLaw(1.0, 2.0, 2.0, -10.0), 0.5) == pytest.approx(1.0, abs=1e-4)

    def test_oracle_median(self):
        assert ratio_median(RatioLaw(1.0, 2.0, 3.0, 1.0)) == pytest.approx(MEDIAN_1_2_3_1, rel=1e-8)

    def test_median_theta_invariance(self):
        meds = [ratio_median(RatioLaw(1.0, 2.0, 3.0, t)) for t in (-10.0, 1.0, 10.0)]
        assert np.ptp(meds) < 1e-3

    def test_median_decreasing_in_lambda(self):
        meds = [ratio_median(RatioLaw(lam, 2.0, 3.0, 1.0)) for lam in (0.1, 0.5, 1.0, 2.0, 4.0)]
        assert np.all(np.diff(meds) < 0)

    def test_definition_smallest_r(self):
        law = RatioLaw(1.7, 2.5, 3.5, -6.0)
        q = ratio_quantile(law, 0.3)
        assert ratio_cdf(law, q) >= 0.3 - 1e-8
        assert ratio_cdf(law, q * (1 - 1e-6)) < 0.3

    def test_domain(self):
        with pytest.raises(DomainError):
            ratio_quantile(RatioLaw(1.0, 2.0, 3.0), 1.0)


class TestMean:
    def test_independent_identity(self):
        assert ratio_mean(RatioLaw(1.0, 2.0, 3.0, 1e-9)) == pytest.approx(1.0, abs=1e-4)
        assert ratio_mean(RatioLaw(2.0, 3.0, 4.0, 1e-9)) == pytest.approx(0.5, abs=1e-4)

    def test_right_skew(self):
        law = RatioLaw(3.0, 2.0, 3.0, 1.0)
        assert ratio_mean(law) > ratio_median(law)

    def test_requires_shape_v_above_one(self):
        with pytest.raises(DomainError):
            ratio_mean(RatioLaw(1.0, 2.0, 1.0))


class TestBatchAgainstAdaptive:
    @given(st.floats(0.05, 20), st.floats(1.05, 8), st.floats(1.05, 8), st.floats(-30, 30),
           st.floats(0.02, 0.98))
    def test_pdf_cdf_quantile(self, lam, du, dv, theta, p):
        law = RatioLaw(lam, du, dv, theta)
        r = float(gb2_quantile(p, lam, du, dv))
        pdf = ratio_pdf_lambda(law, r)
        assert np.exp(ratio_logpdf_batch(r, lam, du, dv, theta)) == pytest.approx(pdf, rel=1e-7, abs=1e-12)
        assert ratio_cdf_batch(r, lam, du, dv, theta) == pytest.approx(ratio_cdf(law, r), abs=1e-8)
        q = ratio_quantile_batch(p, lam, du, dv, theta)
        assert ratio_cdf(law, q) == pytest.approx(p, abs=1e-8)

    def test_broadcasting(self):
        out = ratio_logpdf_batch(np.ones((3, 1)), np.array([1.0, 2.0]), 2.0, 3.0, 1.0)
        assert out.shape == (3, 2)
        q = ratio_quantile_batch([0.25, 0.5, 0.75], 1.0, 2.0, 3.0, [-4.0, 0.0, 4.0])
        assert np.all(np.diff(q) > 0)
