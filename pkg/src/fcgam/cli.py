"""Command-line interface.

Exit codes: 0 success, 1 numerical failure, 2 invalid input or usage,
3 optimizer did not converge.  Every command writes a manifest next to its
outputs recording the command, its configuration (and hash), the seed and
the package version.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from . import io
from .copula import kendall_tau, theta_from_tau
from .exceptions import ConvergenceError, DomainError, IndefiniteHessianError, QuadratureError
from .figures import density_grid, figure1_cells, median_curves
from .inference import (credible_intervals, difference_transforms, posterior_sample, tau_transform,
                        write_intervals_csv)
from .model import FitOptions, design_matrix, fit, predict_quantiles, predictors, quantile_residuals
from .simlab import generate_dataset, preset, run_study, write_study

log = logging.getLogger("fcgam")

EXIT_OK, EXIT_NUMERIC, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2, 3
DEFAULT_SEED = 20240101

STUDY_PRESETS = {
    "study1-small": dict(study_id="1", n=500, replications=20, theta0=-5.0),
    "study1": dict(study_id="1", n=500, replications=200, theta0=-5.0),
    "study2": dict(study_id="2", n=500, replications=100, theta0=10.0),
    "study3a": dict(study_id="3a", n=1000, replications=50),
    "study3b": dict(study_id="3b", n=1000, replications=50),
}


def _manifest_path(output):
    root, _ = os.path.splitext(output)
    return root + ".manifest.json"


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def _config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


# -- commands --------------------------------------------------------------

def cmd_fit(args):
    data = io.read_dataset(args.input)
    res = fit(data, args.theta_mode, opts=FitOptions(max_iter=args.max_iter, ridge=args.ridge))
    io.write_fit(res, args.output)
    outputs = [args.output]
    if res.neg_hessian_inv is None:
        log.error("observed information is not positive definite; rerun with --ridge "
                  "to regularize (intervals skipped)")
        io.write_manifest(_manifest_path(args.output), "fit", _config(args), args.seed, outputs)
        return EXIT_NUMERIC
    if args.intervals:
        post = posterior_sample(res, args.draws, seed=args.seed)
        transforms = difference_transforms(post.param_names)
        if res.theta_mode == "constant":
            transforms.update(tau_transform(post.param_names))
        write_intervals_csv(credible_intervals(post, args.level, transforms), args.intervals)
        outputs.append(args.intervals)
    io.write_manifest(_manifest_path(args.output), "fit", _config(args), args.seed, outputs)
    print(f"loglik={res.loglik:.6f} bic={res.bic:.6f} converged={res.converged} "
          f"iterations={res.iterations}")
    if not res.converged:
        log.error("optimizer did not converge: %s", res.message)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_predict(args):
    res = io.read_fit(args.fit)
    cov, _, _ = io.read_covariates(args.input, res.covariate_names)
    x = design_matrix(cov)
    _, _, theta, lam = predictors(res.gamma_hat, x)
    qs = sorted(set(args.quantiles) | {0.5})
    cols = {q: predict_quantiles(res, x, q) for q in qs}
    header = ["row", "capital_lambda", "theta"] + [f"q{q:g}" for q in qs]
    rows = [[i + 1, lam[i], theta[i], *[cols[q][i] for q in qs]] for i in range(len(x))]
    _write_rows(args.output, header, rows)
    io.write_manifest(_manifest_path(args.output), "predict", _config(args), None, [args.output])
    return EXIT_OK


def cmd_residuals(args):
    res = io.read_fit(args.fit)
    data = io.read_dataset(args.input)
    if data.names != res.covariate_names:
        raise io.InputError(f"covariates {list(data.names)} do not match the fit "
                            f"{list(res.covariate_names)}")
    resid = quantile_residuals(res, data)
    _write_rows(args.output, ["row", "r", "residual"],
                [[i + 1, data.r[i], resid[i]] for i in range(data.n)])
    io.write_manifest(_manifest_path(args.output), "residuals", _config(args), None, [args.output])
    return EXIT_OK


def cmd_simulate(args):
    cfg = preset(args.study, n=args.n, replications=1, theta0=args.theta0, seed=args.seed)
    data = generate_dataset(cfg, np.random.default_rng(args.seed))
    rows = np.column_stack([data.u, data.v, data.x[:, 1:]])
    _write_rows(args.output, ["u", "v", *data.names], rows.tolist())
    io.write_manifest(_manifest_path(args.output), "simulate", _config(args), args.seed, [args.output])
    return EXIT_OK


def cmd_study(args):
    setup = dict(STUDY_PRESETS[args.preset]) if args.preset else {}
    if args.study:
        setup["study_id"] = args.study
    if "study_id" not in setup:
        raise io.InputError("give --preset or --study")
    for key in ("n", "replications", "theta0"):
        if getattr(args, key) is not None:
            setup[key] = getattr(args, key)
    extra = {}
    if args.methods:
        extra["methods"] = tuple(args.methods)
    if args.draws:
        extra["n_draws"] = args.draws
    cfg = preset(setup.pop("study_id"), seed=args.seed, **setup, **extra)
    metrics = run_study(cfg, jobs=args.jobs)
    os.makedirs(args.output_dir, exist_ok=True)
    csv_path = os.path.join(args.output_dir, "replications.csv")
    json_path = os.path.join(args.output_dir, "summary.json")
    write_study(metrics, csv_path, json_path)
    config = _config(args)
    config["resolved"] = cfg.to_dict()
    config.pop("jobs")  # results do not depend on the worker count
    io.write_manifest(os.path.join(args.output_dir, "manifest.json"), "study", config, args.seed,
                      [csv_path, json_path])
    print(f"replications={cfg.replications} excluded={metrics.n_failed}")
    if metrics.exclusion_rate >= 0.02:
        log.error("exclusion rate %.1f%% is at or above 2%%", 100 * metrics.exclusion_rate)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_density_grid(args):
    if args.figure:
        return _figure_data(args)
    if args.capital_lambda is not None:
        lam = args.capital_lambda
    elif args.rate_u is not None and args.rate_v is not None:
        lam = args.rate_u / args.rate_v
    else:
        raise io.InputError("give --capital-lambda or both --rate-u and --rate-v")
    if not args.output:
        raise io.InputError("--output is required")
    for name in ("shape_u", "shape_v"):
        if getattr(args, name) is None or getattr(args, name) <= 0:
            raise io.InputError(f"--{name.replace('_', '-')} must be given and positive")
    if lam <= 0:
        raise io.InputError("Lambda must be positive")
    grid, medians = density_grid(lam, args.shape_u, args.shape_v, args.theta, args.r_max, args.points)
    _write_rows(args.output, ["theta", "r", "pdf", "cdf"], grid.tolist())
    for t, m in medians.items():
        print(f"theta={t:g} median={m:.10g}")
    io.write_manifest(_manifest_path(args.output), "density-grid", _config(args), None, [args.output])
    return EXIT_OK


def _figure_data(args):
    out = args.output_dir or "."
    os.makedirs(out, exist_ok=True)
    written = []
    if args.figure == "1":
        med_rows = []
        for lu, lv, du, dv in figure1_cells():
            grid, medians = density_grid(lu / lv, du, dv, args.theta, points=args.points)
            path = os.path.join(out, f"fig1_lu{lu:g}_lv{lv:g}_du{du:g}_dv{dv:g}.csv")
            _write_rows(path, ["theta", "r", "pdf", "cdf"], grid.tolist())
            written.append(path)
            med_rows.extend([lu, lv, du, dv, t, m] for t, m in medians.items())
        path = os.path.join(out, "fig1_medians.csv")
        _write_rows(path, ["rate_u", "rate_v", "shape_u", "shape_v", "theta", "median"], med_rows)
        written.append(path)
    else:
        path = os.path.join(out, "fig2_medians.csv")
        _write_rows(path, ["shape_u", "shape_v", "theta", "capital_lambda", "median"],
                    median_curves(thetas=args.theta).tolist())
        written.append(path)
    io.write_manifest(os.path.join(out, f"fig{args.figure}.manifest.json"), "density-grid",
                      _config(args), None, written)
    return EXIT_OK


def cmd_tau(args):
    if args.inverse:
        for t in args.values:
            print(f"tau={t:g} theta={theta_from_tau(t):.10g}")
    else:
        for t in args.values:
            print(f"theta={t:g} tau={kendall_tau(t):.10g}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="fcgam", description="Frank-copula gamma ratio regression")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit the model to a CSV (u, v, covariates)")
    f.add_argument("--input", required=True)
    f.add_argument("--output", required=True, help="fit JSON")
    f.add_argument("--intervals", help="credible-interval CSV")
    f.add_argument("--theta-mode", choices=("constant", "modeled"), default="constant")
    f.add_argument("--level", type=float, default=0.95)
    f.add_argument("--draws", type=int, default=10000)
    f.add_argument("--seed", type=int, default=DEFAULT_SEED)
    f.add_argument("--max-iter", type=int, default=500)
    f.add_argument("--ridge", action="store_true",
                   help="regularize an indefinite information matrix instead of failing")
    f.set_defaults(func=cmd_fit)

    pr = sub.add_parser("predict", help="conditional quantiles from a fit")
    pr.add_argument("--fit", required=True)
    pr.add_argument("--input", required=True)
    pr.add_argument("--output", required=True)
    pr.add_argument("--quantiles", type=float, nargs="*", default=[0.1, 0.9])
    pr.set_defaults(func=cmd_predict)

    r = sub.add_parser("residuals", help="quantile residuals of a fit")
    r.add_argument("--fit", required=True)
    r.add_argument("--input", required=True)
    r.add_argument("--output", required=True)
    r.set_defaults(func=cmd_residuals)

    s = sub.add_parser("simulate", help="draw one data set from a study design")
    s.add_argument("--study", choices=("1", "2", "3a", "3b"), required=True)
    s.add_argument("--n", type=int, default=500)
    s.add_argument("--theta0", type=float)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_simulate)

    st = sub.add_parser("study", help="run a Monte-Carlo study")
    st.add_argument("--preset", choices=sorted(STUDY_PRESETS))
    st.add_argument("--study", choices=("1", "2", "3a", "3b"))
    st.add_argument("--n", type=int)
    st.add_argument("--replications", type=int)
    st.add_argument("--theta0", type=float)
    st.add_argument("--methods", nargs="+")
    st.add_argument("--draws", type=int)
    st.add_argument("--jobs", type=int, default=1)
    st.add_argument("--seed", type=int, default=DEFAULT_SEED)
    st.add_argument("--output-dir", required=True)
    st.set_defaults(func=cmd_study)

    d = sub.add_parser("density-grid", help="tabulate pdf/cdf of the ratio")
    d.add_argument("--capital-lambda", type=float)
    d.add_argument("--rate-u", type=float)
    d.add_argument("--rate-v", type=float)
    d.add_argument("--shape-u", type=float)
    d.add_argument("--shape-v", type=float)
    d.add_argument("--theta", type=float, nargs="+", default=[-10.0, 1.0, 10.0])
    d.add_argument("--r-max", type=float)
    d.add_argument("--points", type=int, default=401)
    d.add_argument("--output")
    d.add_argument("--figure", choices=("1", "2"), help="write every panel of a figure")
    d.add_argument("--output-dir")
    d.set_defaults(func=cmd_density_grid)

    t = sub.add_parser("tau", help="Kendall's tau of the Frank copula")
    t.add_argument("values", type=float, nargs="+")
    t.add_argument("--inverse", action="store_true", help="map tau to theta")
    t.set_defaults(func=cmd_tau)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits with 2 on usage errors
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (io.InputError, DomainError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (QuadratureError, IndefiniteHessianError, ArithmeticError, np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
