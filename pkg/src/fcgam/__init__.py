"""Regression for ratios of dependent gamma variables joined by a Frank copula."""
from .benchmarks import (GammaLSSRegressor, GammaRegressor, GB2Regressor, LogNormalLSSRegressor,
                         LogNormalRegressor)
from .copula import (EPS_INDEP, GammaMarginal, frank_cdf, frank_cond_cdf, frank_density,
                     kendall_tau, sample_pair, theta_from_tau)
from .exceptions import (BracketError, ConvergenceError, DomainError, FitDivergenceError,
                         IndefiniteHessianError, QuadratureError)
from .inference import (credible_intervals, observed_information, posterior_sample,
                        predictive_loglik)
from .model import (CoefficientVector, Dataset, FCGAMRegressor, FitOptions, FitResult, fit,
                    initial_values, neg_loglik, predict_law, predictors, quantile_residuals)
from .ratio import (RatioLaw, gb2_pdf, ratio_cdf, ratio_mean, ratio_median, ratio_pdf_full,
                    ratio_pdf_lambda, ratio_quantile)
from .simlab import SimConfig, generate_covariates, generate_dataset, preset, run_study, simulate_study
from .specfun import DEFAULT_QUADRATURE, QuadratureConfig

__all__ = [name for name in dir() if not name.startswith("_")]
