"""Data-generating processes and Monte-Carlo studies.

Three designs share four covariates (two standard normal, two Bernoulli(0.5),
all pairwise Pearson correlations 0.4):

* study "1": negative dependence, shapes (2, 6);
* study "2": positive dependence, shapes (2, 2);
* study "3a"/"3b": the study-1 design with a covariate-dependent (3a) or
  fixed (3b, theta = -1) Frank parameter, fitted with both theta modes.

Each replication draws its own training and test set from a random stream
keyed by ``(seed, replication)``, so results do not depend on how the
replications are spread over worker processes.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .benchmarks import BENCHMARKS, make_benchmark
from .copula import sample_pairs
from .exceptions import ConvergenceError, DomainError
from .inference import credible_intervals, posterior_sample, predictive_loglik
from .model import CoefficientVector, Dataset, FitOptions, design_matrix, fit, predict_quantiles, predictors
from .ratio import RatioLaw, ratio_quantile, ratio_quantile_batch
from .specfun import DEFAULT_QUADRATURE

log = logging.getLogger(__name__)

__all__ = [
    "LATENT_CORR",
    "SimConfig",
    "SimMetrics",
    "preset",
    "generate_covariates",
    "generate_dataset",
    "simulate_study",
    "fit_benchmark",
    "run_replication",
    "run_study",
    "write_study",
]

PEARSON_TARGET = 0.4
# Latent Gaussian correlations giving Pearson 0.4 after dichotomizing at 0:
#   continuous/binary: corr(Z, 1{W>0}) = rho * phi(0) / 0.5   => rho = 0.4 / sqrt(2/pi)
#   binary/binary:     corr(1{Z>0}, 1{W>0}) = 2 asin(rho) / pi => rho = sin(0.2 pi)
# tools/covariate_calibration.py confirms these by simulation.
LATENT_CORR = {
    "cc": PEARSON_TARGET,
    "cb": PEARSON_TARGET / math.sqrt(2.0 / math.pi),
    "bb": math.sin(PEARSON_TARGET * math.pi / 2.0),
}


def _latent_matrix():
    c = np.array([0, 0, 1, 1])  # 0 continuous, 1 binary
    kind = {(0, 0): "cc", (0, 1): "cb", (1, 0): "cb", (1, 1): "bb"}
    m = np.array([[1.0 if i == j else LATENT_CORR[kind[c[i], c[j]]] for j in range(4)]
                  for i in range(4)])
    return m


_LATENT_CHOL = np.linalg.cholesky(_latent_matrix())


def generate_covariates(n, rng):
    """``(n, 4)`` covariates: X1, X2 ~ N(0, 1); X3, X4 ~ Bernoulli(0.5)."""
    if n < 1:
        raise DomainError("n must be positive")
    z = rng.standard_normal((n, 4)) @ _LATENT_CHOL.T
    return np.column_stack([z[:, :2], (z[:, 2:] > 0).astype(float)])


@dataclass(frozen=True)
class SimConfig:
    study_id: str
    n: int
    replications: int
    beta_u: tuple
    beta_v: tuple
    beta_theta: tuple
    shape_u: float
    shape_v: float
    seed: int = 20240101
    methods: tuple = ("FCGAM", "GB2", "LN", "LN.LSS", "GA", "GA.LSS")
    fit_modes: tuple = ("constant",)
    n_draws: int = 10000
    level: float = 0.95

    def __post_init__(self):
        if self.study_id not in ("1", "2", "3a", "3b"):
            raise DomainError(f"unknown study id {self.study_id!r}")
        if self.n < 20 or self.replications < 1:
            raise DomainError("need n >= 20 and at least one replication")
        if not (self.shape_u > 1 and self.shape_v > 1):
            raise DomainError("shapes must exceed 1")
        if not len(self.beta_u) == len(self.beta_v) == len(self.beta_theta) == 5:
            raise DomainError("coefficient vectors must have length 5")
        unknown = set(self.methods) - {"FCGAM", *BENCHMARKS}
        if unknown:
            raise DomainError(f"unknown methods {sorted(unknown)}")

    @property
    def true_modeled(self):
        return any(b != 0 for b in self.beta_theta[1:])

    def to_dict(self):
        return asdict(self)


_BETA_U = (0.0, 0.4, -0.4, 0.2, -0.2)


def preset(study_id, n=500, replications=100, theta0=None, seed=20240101, **kw):
    """Configuration of one of the simulation designs.

    ``theta0`` is the Frank intercept (defaults: -5 for study 1, 5 for
    study 2; fixed by design for studies 3a and 3b).
    """
    study_id = str(study_id)
    if study_id == "1":
        t0 = -5.0 if theta0 is None else theta0
        base = dict(beta_v=(0.0, -0.2, 0.2, -0.4, 0.4), beta_theta=(t0, 0, 0, 0, 0),
                    shape_u=2.0, shape_v=6.0)
    elif study_id == "2":
        t0 = 5.0 if theta0 is None else theta0
        base = dict(beta_v=(0.0, 0.2, -0.2, 0.4, -0.4), beta_theta=(t0, 0, 0, 0, 0),
                    shape_u=2.0, shape_v=2.0)
    elif study_id in ("3a", "3b"):
        if theta0 is not None:
            raise DomainError("study 3 fixes the Frank coefficients")
        bt = (0.0, 1.0, -1.0, 0.5, -0.5) if study_id == "3a" else (-1.0, 0, 0, 0, 0)
        base = dict(beta_v=(0.0, -0.2, 0.2, -0.4, 0.4), beta_theta=bt, shape_u=2.0, shape_v=6.0,
                    methods=("FCGAM",), fit_modes=("constant", "modeled"))
    else:
        raise DomainError(f"unknown study id {study_id!r}")
    base["beta_theta"] = tuple(float(b) for b in base["beta_theta"])
    base.update(kw)
    return SimConfig(study_id=study_id, n=n, replications=replications, beta_u=_BETA_U,
                     seed=seed, **base)


def _true_coef(cfg):
    mode = "modeled" if cfg.true_modeled else "constant"
    return CoefficientVector(cfg.beta_u, cfg.beta_v, cfg.beta_theta, cfg.shape_u, cfg.shape_v, mode)


def generate_dataset(cfg: SimConfig, rng, n=None):
    """Covariates and exact (u, v) draws under the configuration."""
    n = cfg.n if n is None else n
    x = design_matrix(generate_covariates(n, rng))
    lu, lv, theta, _ = predictors(_true_coef(cfg), x)
    u, v = sample_pairs(lu, cfg.shape_u, lv, cfg.shape_v, theta, rng)
    return Dataset(u, v, x, ("x1", "x2", "x3", "x4"))


def simulate_study(study_id, n=500, theta0=None, seed=0):
    """Convenience: ``(X, Y)`` arrays from a preset, ``Y = [u, v]``."""
    cfg = preset(study_id, n=n, replications=1, theta0=theta0, seed=seed)
    d = generate_dataset(cfg, np.random.default_rng(seed))
    return d.x[:, 1:], np.column_stack([d.u, d.v])


def fit_benchmark(kind, data: Dataset):
    """Fit a ratio-only benchmark model to ``data`` (uses r and x only)."""
    return make_benchmark(kind).fit(data.x[:, 1:], data.r)


def _replication_rng(cfg, rep):
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, rep]))


_true_median_cache: dict = {}


def true_medians(cfg: SimConfig, x):
    """Conditional medians of the ratio at the generating parameters.

    With a constant Frank parameter the median scales as 1 / Lambda, so one
    tight adaptive quantile at Lambda = 1 serves every row; otherwise each
    row's median comes from the batch quantile.
    """
    g = _true_coef(cfg)
    _, _, theta, lam = predictors(g, x)
    if not cfg.true_modeled:
        key = (cfg.shape_u, cfg.shape_v, cfg.beta_theta[0])
        if key not in _true_median_cache:
            tight = DEFAULT_QUADRATURE.replace(abs_tol=1e-12, rel_tol=1e-10)
            law = RatioLaw(1.0, cfg.shape_u, cfg.shape_v, cfg.beta_theta[0])
            _true_median_cache[key] = ratio_quantile(law, 0.5, tight, rtol=1e-12)
        return _true_median_cache[key] / lam
    return ratio_quantile_batch(0.5, lam, cfg.shape_u, cfg.shape_v, theta)


def _rmse(a, b):
    return float(np.sqrt(np.mean((a - b) ** 2)))


def run_replication(cfg: SimConfig, rep: int):
    """One replication; returns a list of ``(method, metric, value)`` records.

    A failing replication returns ``[("*", "failed", 1.0)]`` plus the reason
    in the log; it is excluded from aggregation.
    """
    rng = _replication_rng(cfg, rep)
    train = generate_dataset(cfg, rng)
    test = generate_dataset(cfg, rng)
    med_true = true_medians(cfg, test.x)
    records = []
    try:
        if "FCGAM" in cfg.methods:
            truth = _true_coef(cfg)
            for mode in cfg.fit_modes:
                label = "FCGAM" if len(cfg.fit_modes) == 1 else f"FCGAM.{mode}"
                res = fit(train, mode, opts=FitOptions())
                if not res.converged:
                    raise ConvergenceError(f"{label}: {res.message}")
                post = posterior_sample(res, cfg.n_draws, seed=[cfg.seed, rep])
                cis = {c.name: c for c in credible_intervals(post, cfg.level)}
                true_vec = _truth_by_name(truth, mode)
                for name, ci in cis.items():
                    records.append((label, f"est:{name}", ci.estimate))
                    records.append((label, f"cover:{name}",
                                    float(ci.lower <= true_vec[name] <= ci.upper)))
                med = predict_quantiles(res, test.x, 0.5)
                records.append((label, "rmse_median", _rmse(med, med_true)))
                records.append((label, "pred_loglik", predictive_loglik(res, test, "ratio")))
                records.append((label, "pred_loglik_joint", predictive_loglik(res, test, "joint")))
                records.append((label, "bic", res.bic))
        for kind in cfg.methods:
            if kind == "FCGAM":
                continue
            model = fit_benchmark(kind, train)
            records.append((kind, "rmse_median", _rmse(model.predict(test.x[:, 1:]), med_true)))
            records.append((kind, "pred_loglik", model.loglik(test.x[:, 1:], test.r)))
    except (ArithmeticError, ConvergenceError, DomainError, np.linalg.LinAlgError) as err:
        log.warning("replication %d failed: %s", rep, err)
        return [("*", "failed", 1.0)]
    return records


def _true_natural(truth, mode):
    bt = truth.beta_theta if mode == "modeled" else truth.beta_theta[:1]
    return np.concatenate([truth.beta_u, truth.beta_v, bt, [truth.shape_u, truth.shape_v]])


def _truth_by_name(truth, mode):
    as_mode = replace(truth, beta_theta=truth.beta_theta[:1] if mode == "constant" else truth.beta_theta,
                      theta_mode=mode)
    return dict(zip(as_mode.natural_names(("x1", "x2", "x3", "x4")), _true_natural(truth, mode)))


@dataclass
class SimMetrics:
    """Aggregated study results.

    ``summary[method][metric]`` holds ``{"mean", "sd", "count"}``; estimate
    entries additionally carry ``bias`` against the generating value.
    """

    config: dict
    records: list
    summary: dict
    n_failed: int
    wins: dict = field(default_factory=dict)

    @property
    def exclusion_rate(self):
        return self.n_failed / self.config["replications"]

    def mean(self, method, metric):
        return self.summary[method][metric]["mean"]

    def coverage(self, method="FCGAM"):
        return {k[len("cover:"):]: v["mean"] for k, v in self.summary[method].items()
                if k.startswith("cover:")}

    def bias(self, method="FCGAM"):
        return {k[len("est:"):]: v["bias"] for k, v in self.summary[method].items()
                if k.startswith("est:")}


def _aggregate(cfg, per_rep):
    failed = sum(1 for recs in per_rep if recs and recs[0][1] == "failed")
    ok = [(rep, recs) for rep, recs in enumerate(per_rep) if not (recs and recs[0][1] == "failed")]
    values: dict = {}
    for _, recs in ok:
        for method, metric, value in recs:
            values.setdefault(method, {}).setdefault(metric, []).append(value)
    truth = _true_coef(cfg)
    summary = {}
    for method, metrics in values.items():
        summary[method] = {}
        mode = method.split(".")[1] if method.startswith("FCGAM.") else "constant"
        truth_names = _truth_by_name(truth, mode)
        for metric, vals in metrics.items():
            arr = np.asarray(vals, dtype=float)
            entry = {"mean": float(np.mean(arr)), "sd": float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0,
                     "count": int(arr.size)}
            if metric.startswith("est:"):
                name = metric[4:]
                if mode == "constant" and truth.theta_mode == "modeled" and name.startswith("beta_theta"):
                    pass  # no single true value for a misspecified constant fit
                else:
                    entry["bias"] = entry["mean"] - float(truth_names[name])
            summary[method][metric] = entry
    # share of replications in which FCGAM has the best predictive log-likelihood
    wins = {}
    fc = [m for m in values if m.startswith("FCGAM")]
    others = [m for m in values if not m.startswith("FCGAM")]
    for f in fc:
        for o in others:
            a = np.asarray(values[f]["pred_loglik"])
            b = np.asarray(values[o]["pred_loglik"])
            wins[f"{f}>{o}"] = float(np.mean(a > b))
        if others:
            stack = np.column_stack([values[o]["pred_loglik"] for o in others])
            wins[f"{f}>all"] = float(np.mean(np.asarray(values[f]["pred_loglik"]) > stack.max(axis=1)))
    records = [(cfg.study_id, rep, m, k, v) for rep, recs in enumerate(per_rep) for m, k, v in recs]
    return SimMetrics(cfg.to_dict(), records, summary, failed, wins)


def _run_chunk(args):
    cfg, reps = args
    return [run_replication(cfg, r) for r in reps]


def run_study(cfg: SimConfig, jobs=1):
    """Run every replication and aggregate.

    ``jobs > 1`` spreads replications over processes; the output is
    identical for any ``jobs`` value.
    """
    reps = list(range(cfg.replications))
    if jobs <= 1:
        per_rep = [run_replication(cfg, r) for r in reps]
    else:
        chunks = [reps[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_chunk, [(cfg, c) for c in chunks]))
        per_rep = [None] * len(reps)
        for chunk, res in zip(chunks, results):
            for r, recs in zip(chunk, res):
                per_rep[r] = recs
    metrics = _aggregate(cfg, per_rep)
    if metrics.n_failed:
        log.warning("%d of %d replications excluded", metrics.n_failed, cfg.replications)
    return metrics


def write_study(metrics: SimMetrics, csv_path, json_path):
    """Tidy per-replication CSV plus an aggregated JSON summary."""
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["study", "replication", "method", "metric", "value"])
        for row in metrics.records:
            w.writerow([*row[:4], repr(float(row[4]))])
    doc = {
        "config": metrics.config,
        "n_failed": metrics.n_failed,
        "exclusion_rate": metrics.exclusion_rate,
        "summary": metrics.summary,
        "wins": metrics.wins,
    }
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
