"""CSV ingestion, fit serialization and run manifests."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from importlib import metadata

import numpy as np

from .exceptions import DomainError
from .model import CoefficientVector, Dataset, FitResult

__all__ = ["InputError", "read_table", "read_dataset", "read_covariates", "fit_to_dict",
           "write_fit", "read_fit", "write_manifest", "config_hash", "version"]

FIT_SCHEMA = "fcgam.fit/1"
_MISSING = {"", "na", "nan", "null", "none", "."}


class InputError(DomainError):
    """Malformed or incomplete input file."""


def version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover - source checkout
        return "0+unknown"


def read_table(path):
    """Read a numeric CSV into ``(header, values)``; rejects missing cells.

    Row numbers in error messages count data rows from 1 (the header is
    row 0).
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as err:
        raise InputError(f"cannot open {path}: {err.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        if len(set(header)) != len(header) or any(h == "" for h in header):
            raise InputError(f"{path}: header has empty or duplicated column names")
        rows = []
        for i, row in enumerate(reader, start=1):
            if not row or all(c.strip() == "" for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}: row {i} has {len(row)} fields, expected {len(header)}")
            vals = []
            for name, cell in zip(header, row):
                cell = cell.strip()
                if cell.lower() in _MISSING:
                    raise InputError(f"{path}: row {i} has a missing value in column '{name}'")
                try:
                    val = float(cell)
                except ValueError:
                    raise InputError(f"{path}: row {i}, column '{name}': "
                                     f"cannot parse {cell!r} as a number") from None
                if not math.isfinite(val):
                    raise InputError(f"{path}: row {i}, column '{name}': non-finite value")
                vals.append(val)
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return header, np.array(rows)


def read_dataset(path):
    """Dataset from a CSV with columns ``u``, ``v`` and covariates."""
    header, values = read_table(path)
    for col in ("u", "v"):
        if col not in header:
            raise InputError(f"{path}: missing required column '{col}'")
    iu, iv = header.index("u"), header.index("v")
    cov_idx = [j for j in range(len(header)) if j not in (iu, iv)]
    u, v = values[:, iu], values[:, iv]
    for name, col in (("u", u), ("v", v)):
        bad = np.flatnonzero(col <= 0)
        if bad.size:
            raise InputError(f"{path}: row {bad[0] + 1}: column '{name}' must be positive")
    names = tuple(header[j] for j in cov_idx)
    return Dataset.from_arrays(u, v, values[:, cov_idx], names)


def read_covariates(path, names):
    """Covariate matrix (no intercept) with the columns ``names`` in order."""
    header, values = read_table(path)
    missing = [n for n in names if n not in header]
    if missing:
        raise InputError(f"{path}: missing covariate columns {missing}")
    return values[:, [header.index(n) for n in names]], header, values


def fit_to_dict(result: FitResult):
    g = result.gamma_hat
    free = g.to_free()
    natural = g.natural_vector()
    se_free = result.standard_errors
    coefs = []
    for j, (name, val) in enumerate(zip(g.natural_names(result.covariate_names), natural)):
        se = None
        if se_free is not None:
            # delta method for the shapes: d delta / d zeta = exp(zeta)
            se = float(se_free[j] * (np.exp(free[j]) if name.startswith("shape") else 1.0))
        coefs.append({"name": name, "value": float(val), "se": se})
    return {
        "schema": FIT_SCHEMA,
        "theta_mode": g.theta_mode,
        "covariates": list(result.covariate_names),
        "coefficients": coefs,
        "gamma": g.as_dict(),
        "free_parameters": {"names": result.param_names, "values": free.tolist()},
        "neg_hessian_inv": None if result.neg_hessian_inv is None else result.neg_hessian_inv.tolist(),
        "loglik": result.loglik,
        "bic": result.bic,
        "n_obs": result.n_obs,
        "n_params": result.n_params,
        "convergence": {
            "converged": result.converged,
            "iterations": result.iterations,
            "gradient_norm": result.gradient_norm,
            "message": result.message,
        },
    }


def write_fit(result: FitResult, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(fit_to_dict(result), fh, indent=2)
        fh.write("\n")


def read_fit(path):
    """Rebuild a :class:`FitResult` from :func:`write_fit` output."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise InputError(f"cannot read fit file {path}: {err}") from None
    if doc.get("schema") != FIT_SCHEMA:
        raise InputError(f"{path}: not a fit file (schema {doc.get('schema')!r})")
    g = doc["gamma"]
    gamma = CoefficientVector(g["beta_u"], g["beta_v"], g["beta_theta"], g["shape_u"],
                              g["shape_v"], g["theta_mode"])
    cov = doc["neg_hessian_inv"]
    conv = doc["convergence"]
    return FitResult(
        gamma_hat=gamma,
        loglik=doc["loglik"],
        neg_hessian_inv=None if cov is None else np.array(cov),
        converged=conv["converged"],
        iterations=conv["iterations"],
        gradient_norm=conv["gradient_norm"],
        bic=doc["bic"],
        n_obs=doc["n_obs"],
        covariate_names=tuple(doc["covariates"]),
        message=conv["message"],
    )


def config_hash(config: dict):
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def write_manifest(path, command, config: dict, seed, outputs):
    doc = {
        "command": command,
        "config": config,
        "config_hash": config_hash(config),
        "seed": seed,
        "version": version(),
        "outputs": list(outputs),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return doc
