"""Check the latent correlations used for the simulation covariates.

Two standard normals and two Bernoulli(0.5) indicators should have all
pairwise Pearson correlations equal to 0.4.  The latent Gaussian matrix in
``fcgam.simlab`` uses closed forms; this script confirms them two ways:
numerical root-finding on the exact bivariate-normal orthant probability,
and a large simulation.

    python3 tools/covariate_calibration.py
"""
import math

import numpy as np
from scipy import optimize, stats

from fcgam.simlab import LATENT_CORR, PEARSON_TARGET, generate_covariates


def binary_binary(rho):
    # P(Z1 > 0, Z2 > 0) from the bivariate normal CDF, then the phi coefficient
    p11 = stats.multivariate_normal([0, 0], [[1, rho], [rho, 1]]).cdf([0, 0])
    return (p11 - 0.25) / 0.25


def continuous_binary(rho):
    # E[Z 1{W > 0}] = rho * phi(0); sd of the indicator is 0.5
    return rho * stats.norm.pdf(0.0) / 0.5


def main():
    bb = optimize.brentq(lambda r: binary_binary(r) - PEARSON_TARGET, 0.0, 0.99, xtol=1e-12)
    cb = optimize.brentq(lambda r: continuous_binary(r) - PEARSON_TARGET, 0.0, 0.99, xtol=1e-14)
    print(f"binary/binary     root {bb:.8f}  closed form {LATENT_CORR['bb']:.8f}")
    print(f"continuous/binary root {cb:.8f}  closed form {LATENT_CORR['cb']:.8f}")
    x = generate_covariates(2_000_000, np.random.default_rng(1))
    corr = np.corrcoef(x, rowvar=False)
    print("simulated Pearson correlations (n = 2e6):")
    print(np.array2string(corr, precision=4))
    assert math.isclose(bb, LATENT_CORR["bb"], abs_tol=1e-6)
    assert math.isclose(cb, LATENT_CORR["cb"], abs_tol=1e-10)


if __name__ == "__main__":
    main()
