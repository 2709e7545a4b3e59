import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special, stats

from fcgam.copula import (EPS_INDEP, GammaMarginal, frank_cdf, frank_cond_cdf,
                          frank_conditional_inverse, frank_density, frank_log_density, gamma_cdf,
                          gamma_pdf, gamma_quantile, gamma_sf, kendall_tau, sample_pair,
                          theta_from_tau)
from fcgam.exceptions import DomainError

# mpmath, tools/oracles.py
FRANK_C_1 = 0.280929803620161371456          # C_1(0.5, 0.5)
FRANK_C_M5 = 0.163595469029403557642         # C_-5(0.3, 0.8)
FRANK_DENS_5 = 0.149738066270956061845       # c_5(0.2, 0.9)
FRANK_DENS_M10 = 2.42196464052876090967      # c_-10(0.2, 0.9)
TAU = {-10: -0.665777386271978503, -5: -0.456700958160116978, -1: -0.110018536448993106,
       1: 0.110018536448993106, 5: 0.456700958160116978, 10: 0.665777386271978503,
       30: 0.873977484741534782}
THETAS = [-10.0, -5.0, -1.0, 1.0, 5.0, 10.0]


class TestGammaMarginal:
    def test_validation(self):
        with pytest.raises(DomainError):
            GammaMarginal(0.0, 2.0)
        with pytest.raises(DomainError):
            GammaMarginal(1.0, -1.0)
        assert GammaMarginal(2.0, 3.0).mean == 1.5

    def test_pdf_values(self):
        assert gamma_pdf(GammaMarginal(1, 1), 0.5) == pytest.approx(np.exp(-0.5), rel=1e-15)
        assert gamma_pdf(GammaMarginal(2, 2), 1.0) == pytest.approx(4 * np.exp(-2), rel=1e-15)

    @pytest.mark.parametrize("rate", [1.0, 2.0])
    @pytest.mark.parametrize("shape", [2.0, 3.0])
    def test_pdf_normalized(self, rate, shape):
        m = GammaMarginal(rate, shape)
        val, _ = integrate.quad(lambda x: gamma_pdf(m, x), 0, np.inf, epsabs=1e-13)
        assert val == pytest.approx(1.0, abs=1e-10)

    def test_cdf_and_quantile(self):
        assert gamma_cdf(GammaMarginal(1, 1), np.log(2)) == pytest.approx(0.5, abs=1e-15)
        assert gamma_cdf(GammaMarginal(3, 4), 0.0) == 0.0
        assert gamma_quantile(GammaMarginal(1, 1), 0.5) == pytest.approx(np.log(2), rel=1e-15)
        assert gamma_quantile(GammaMarginal(2, 1), 0.5) == pytest.approx(np.log(2) / 2, rel=1e-15)
        assert gamma_quantile(GammaMarginal(1, 2), 0.5) == pytest.approx(1.6783, abs=1e-4)

    @given(st.floats(0.1, 10), st.floats(1.01, 20), st.floats(1e-6, 1 - 1e-6))
    def test_round_trip(self, rate, shape, p):
        m = GammaMarginal(rate, shape)
        assert gamma_cdf(m, gamma_quantile(m, p)) == pytest.approx(p, abs=1e-9)

    def test_sf_complements_cdf(self):
        m = GammaMarginal(1.5, 2.5)
        x = np.linspace(0, 10, 21)
        np.testing.assert_allclose(gamma_cdf(m, x) + gamma_sf(m, x), 1.0, atol=1e-15)


class TestFrankCdf:
    def test_boundaries(self):
        assert frank_cdf(3.0, 0.7, 1.0) == pytest.approx(0.7, abs=1e-15)
        assert frank_cdf(3.0, 0.7, 0.0) == 0.0
        assert frank_cdf(-3.0, 1.0, 0.4) == pytest.approx(0.4, abs=1e-15)

    def test_oracle_values(self):
        assert frank_cdf(1.0, 0.5, 0.5) == pytest.approx(FRANK_C_1, abs=1e-14)
        assert frank_cdf(-5.0, 0.3, 0.8) == pytest.approx(FRANK_C_M5, abs=1e-14)

    def test_independence(self):
        assert frank_cdf(1e-10, 0.3, 0.6) == pytest.approx(0.18, abs=1e-15)

    @pytest.mark.parametrize("theta", THETAS)
    def test_two_increasing(self, theta):
        g = np.linspace(0, 1, 21)
        c = frank_cdf(theta, g[:, None], g[None, :])
        rect = c[1:, 1:] - c[:-1, 1:] - c[1:, :-1] + c[:-1, :-1]
        assert rect.min() >= -1e-15

    @given(st.floats(-40, 40), st.floats(0, 1), st.floats(0, 1))
    def test_frechet_bounds(self, theta, a, b):
        c = frank_cdf(theta, a, b)
        assert max(a + b - 1, 0) - 1e-15 <= c <= min(a, b) + 1e-15

    def test_domain(self):
        with pytest.raises(DomainError):
            frank_cdf(1.0, 1.2, 0.5)


class TestFrankDensity:
    def test_oracle_values(self):
        assert frank_density(5.0, 0.2, 0.9) == pytest.approx(FRANK_DENS_5, rel=1e-13)
        assert frank_density(-10.0, 0.2, 0.9) == pytest.approx(FRANK_DENS_M10, rel=1e-13)

    def test_symmetry(self):
        assert frank_density(5.0, 0.2, 0.9) == pytest.approx(frank_density(5.0, 0.9, 0.2), rel=1e-14)

    def test_independence_limit(self):
        assert abs(frank_density(1e-9, 0.3, 0.6) - 1.0) < 1e-6
        assert frank_log_density(EPS_INDEP / 2, 0.3, 0.6) == 0.0

    @pytest.mark.parametrize("theta", [-10.0, -1.0, 1.0, 10.0])
    def test_unit_mass(self, theta):
        val, _ = integrate.dblquad(lambda b, a: frank_density(theta, a, b), 0, 1, 0, 1,
                                   epsabs=1e-10, epsrel=1e-10)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_matches_mixed_derivative(self):
        h = 1e-4
        for theta in (-7.0, 2.0):
            a, b = 0.35, 0.6
            fd = (frank_cdf(theta, a + h, b + h) - frank_cdf(theta, a + h, b - h)
                  - frank_cdf(theta, a - h, b + h) + frank_cdf(theta, a - h, b - h)) / (4 * h * h)
            assert frank_density(theta, a, b) == pytest.approx(fd, rel=1e-6)

    def test_extreme_theta_finite(self):
        # the direct formula overflows e^{|theta|}; the log form must not
        a = np.array([1e-12, 0.3, 1 - 1e-12])
        for theta in (-800.0, 800.0):
            assert np.all(np.isfinite(frank_log_density(theta, a, a[::-1])))

    @given(st.floats(0.01, 40), st.floats(0.001, 0.999), st.floats(0.001, 0.999))
    def test_reflection(self, theta, a, b):
        assert frank_log_density(-theta, a, b) == pytest.approx(frank_log_density(theta, 1 - a, b),
                                                                 abs=1e-10)


class TestConditional:
    def test_cond_cdf_is_partial_derivative(self):
        h = 1e-5
        for theta, a, b in [(-5.0, 0.3, 0.8), (3.0, 0.7, 0.2), (10.0, 0.5, 0.55)]:
            fd = (frank_cdf(theta, a + h, b) - frank_cdf(theta, a - h, b)) / (2 * h)
            assert frank_cond_cdf(theta, a, b) == pytest.approx(fd, abs=1e-9)

    def test_cond_cdf_strong_dependence(self):
        # finite differences of C cancel badly here; mpmath value of dC/da
        assert frank_cond_cdf(25.0, 0.5, 0.55) == pytest.approx(0.777301927983207952790, abs=1e-14)

    def test_inverse_independence(self):
        assert frank_conditional_inverse(1e-10, 0.3, 0.8) == pytest.approx(0.8, abs=1e-15)

    def test_inverse_round_trip_fd(self):
        b = frank_conditional_inverse(-5.0, 0.3, 0.8)
        h = 1e-6
        fd = (frank_cdf(-5.0, 0.3 + h, b) - frank_cdf(-5.0, 0.3 - h, b)) / (2 * h)
        assert fd == pytest.approx(0.8, abs=1e-9)

    @given(st.floats(-60, 60).filter(lambda t: abs(t) > 1e-6), st.floats(1e-6, 1 - 1e-6),
           st.floats(1e-6, 1 - 1e-6))
    def test_inverse_round_trip(self, theta, a, w):
        b = frank_conditional_inverse(theta, a, w)
        assert frank_cond_cdf(theta, a, b) == pytest.approx(w, abs=1e-9)

    def test_marginal_uniformity(self, rng):
        a, w = rng.random(100_000), rng.random(100_000)
        b = frank_conditional_inverse(-5.0, a, w)
        assert stats.kstest(b, "uniform").statistic < 0.006


class TestKendallTau:
    @pytest.mark.parametrize("theta", sorted(TAU))
    def test_oracle(self, theta):
        assert kendall_tau(theta) == pytest.approx(TAU[theta], abs=1e-12)

    def test_rounded_values(self):
        assert kendall_tau(1.0) == pytest.approx(0.11, abs=0.005)
        assert kendall_tau(-5.0) == pytest.approx(-0.46, abs=0.005)

    @pytest.mark.parametrize("theta", [1.0, 5.0, 10.0])
    def test_odd(self, theta):
        assert kendall_tau(theta) + kendall_tau(-theta) == pytest.approx(0.0, abs=1e-8)

    def test_zero_and_small(self):
        assert kendall_tau(0.0) == 0.0
        assert kendall_tau(1e-5) == pytest.approx(1e-5 / 9, rel=1e-8)
        # series and quadrature branches meet smoothly
        assert kendall_tau(1.0001e-4) == pytest.approx(kendall_tau(0.9999e-4), rel=1e-3)

    def test_strictly_increasing(self):
        grid = np.linspace(-30, 30, 121)
        assert np.all(np.diff(kendall_tau(grid)) > 0)

    @given(st.floats(-0.95, 0.95).filter(lambda t: abs(t) > 1e-6))
    def test_inverse(self, tau):
        assert kendall_tau(theta_from_tau(tau)) == pytest.approx(tau, abs=1e-10)

    def test_inverse_domain(self):
        with pytest.raises(DomainError):
            theta_from_tau(1.0)


class TestSampling:
    def test_kendall_tau_of_sample(self, rng):
        u, v = sample_pair(GammaMarginal(1, 2), GammaMarginal(1, 3), -10.0, rng, 100_000)
        assert stats.kendalltau(u[:20000], v[:20000]).statistic == pytest.approx(-0.67, abs=0.01)

    def test_marginals(self, rng):
        mu, mv = GammaMarginal(2, 3), GammaMarginal(1, 2)
        u, v = sample_pair(mu, mv, 5.0, rng, 100_000)
        assert u.mean() == pytest.approx(1.5, abs=0.02)
        assert stats.kstest(special.gammainc(3, 2 * u), "uniform").statistic < 0.01
        assert stats.kstest(special.gammainc(2, v), "uniform").statistic < 0.01

    def test_mean_ratio(self, rng):
        u, v = sample_pair(GammaMarginal(1, 3), GammaMarginal(1, 2), 1.0, rng, 100_000)
        assert u.mean() / v.mean() == pytest.approx(1.5, abs=0.03)

    def test_deterministic(self):
        a = sample_pair(GammaMarginal(1, 2), GammaMarginal(1, 3), 2.0, np.random.default_rng(3), 10)
        b = sample_pair(GammaMarginal(1, 2), GammaMarginal(1, 3), 2.0, np.random.default_rng(3), 10)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])
