"""Execute an :class:`ExperimentConfig` and write its report files."""
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from ..errors import InputError, NumericalError
from ..estimators import FittedModel, fit_krr, fit_nystrom_wkrr, fit_wkrr, predict
from ..io import (read_dataset_csv, read_weights_csv, write_dataset_csv, write_predictions_csv,
                  write_results_csv, write_weights_csv)
from ..kernel import KernelSpec, gram
from ..sampling import (approx_leverage_scores, approximation_factor, empirical_effective_dimension,
                        exact_leverage_scores, make_rng)
from ..simulation import covariance_domination_check, generate_dataset, projection_residual
from ..weights import fit_rulsif, moment_diagnostic
from .config import ExperimentConfig
from .selection import holdout_cv, nystrom_basis

STREAM_WEIGHT_SLICE = 41
EXACT_LEVERAGE_LIMIT = 4000


class Problem:
    """Training data, evaluation data and training weights for one seed."""

    def __init__(self, train, test, weights, weight_fn=None):
        self.train = train
        self.test = test
        self.weights = weights
        self.weight_fn = weight_fn


def _load_problem(cfg: ExperimentConfig, seed, n=None, need_weights=True):
    weight_fn = None
    if cfg.simulation is not None:
        sim = replace(cfg.simulation, seed=seed, n_train=n or cfg.simulation.n_train)
        train, test, weight_fn = generate_dataset(sim)
    else:
        train = read_dataset_csv(cfg.train_path, require_target=True)
        test = read_dataset_csv(cfg.test_path) if cfg.test_path else None
        if test is not None and test.dim != train.dim:
            raise InputError("train and test files differ in the number of features")
    weights = None
    if need_weights:
        weights, test = resolve_weights(cfg, train, test, weight_fn, seed)
    return Problem(train, test, weights, weight_fn)


def weight_slice(n_test, fraction, seed):
    """Split test indices into a weight-estimation slice and an evaluation slice."""
    k = max(1, int(np.ceil(fraction * n_test)))
    if k >= n_test:
        raise InputError(f"test set of {n_test} rows is too small for a weight slice")
    perm = make_rng(seed, STREAM_WEIGHT_SLICE).permutation(n_test)
    est, ev = np.sort(perm[:k]), np.sort(perm[k:])
    assert np.intersect1d(est, ev).size == 0, "weight and evaluation slices overlap"
    return est, ev


def resolve_weights(cfg, train, test, weight_fn, seed):
    """Training weights for the configured source, and the test rows left for evaluation."""
    src = cfg.weight_source
    if src == "CONSTANT_ONE":
        return np.ones(train.n), test
    if src == "EXACT":
        return np.asarray(weight_fn(train.X), dtype=np.float64), test
    if src == "FILE":
        return read_weights_csv(cfg.weights_path, n=train.n), test
    if test is None:
        raise InputError("RULSIF weights need test inputs")
    est_idx, eval_idx = weight_slice(test.n, cfg.rulsif.fraction, seed)
    opts = cfg.rulsif
    wf = fit_rulsif(train.X, test.X[est_idx], alpha=opts.alpha, centers_k=opts.centers_k,
                    gamma_w=opts.gamma_w, lambda_w=opts.lambda_w, seed=seed)
    return np.asarray(wf(train.X), dtype=np.float64), test.subset(eval_idx)


def _select(cfg, problem, estimator, m, seed):
    if not cfg.cv or (len(cfg.lambda_grid) == 1 and len(cfg.gamma_grid) == 1):
        lam = cfg.lam if cfg.lam is not None else cfg.lambda_grid[0]
        gamma = cfg.gamma if cfg.gamma is not None else cfg.gamma_grid[0]
        return float(lam), float(gamma), None
    res = holdout_cv(problem.train, problem.weights, estimator, cfg.lambda_grid, cfg.gamma_grid,
                     m=m, fraction=cfg.cv_fraction, seed=seed,
                     weighted_validation=cfg.weighted_validation, sampling=cfg.sampling)
    return res.best_lambda, res.best_gamma, res


def fit_estimator(problem, estimator, lam, gamma, m=None, seed=0, sampling="ALS") -> FittedModel:
    spec = KernelSpec(gamma)
    train = problem.train
    if estimator == "KRR":
        return fit_krr(train, spec, lam)
    if estimator == "WKRR":
        return fit_wkrr(train, problem.weights, spec, lam)
    basis = nystrom_basis(train, spec, lam, m, seed, sampling)
    return fit_nystrom_wkrr(train, problem.weights, basis, spec, lam)


# ---------------------------------------------------------------- sweep

def sweep_cells(cfg: ExperimentConfig):
    """All ``(seed, n, estimator, m, lambda, gamma)`` cells; ``None`` marks CV-selected values."""
    cells = []
    fixed = [(None, None)] if cfg.cv else [(lam, g) for lam in cfg.lambda_grid for g in cfg.gamma_grid]
    for seed in cfg.seeds:
        for n in cfg.n_values:
            for est in cfg.estimators:
                ms = cfg.m_grid if est == "NYSTROM_WKRR" else (None,)
                for m in ms:
                    for lam, gamma in fixed:
                        cells.append((seed, n, est, m, lam, gamma))
    return cells


_PROBLEMS = {}


def _cached_problem(cfg, seed, n):
    key = (json.dumps(cfg.to_dict(), sort_keys=True), seed, n)
    if key not in _PROBLEMS:
        _PROBLEMS.clear()
        _PROBLEMS[key] = _load_problem(cfg, seed, n)
    return _PROBLEMS[key]


def run_cell(cfg: ExperimentConfig, cell):
    seed, n, est, m, lam, gamma = cell
    problem = _cached_problem(cfg, seed, n)
    if problem.test is None or problem.test.y is None:
        raise InputError("SWEEP needs a test set with targets")
    n_train = problem.train.n
    row = {"seed": seed, "n": n_train, "m": m if m is not None else n_train, "lambda": lam,
           "gamma": gamma, "estimator": est, "weight_source": cfg.weight_source, "mse": np.nan,
           "fit_seconds": np.nan, "predict_seconds": np.nan, "status": "ok"}
    try:
        if lam is None:
            sub = replace(cfg, cv=True)
            lam, gamma, _ = _select(sub, problem, est, m, seed)
            row.update({"lambda": lam, "gamma": gamma})
        t0 = time.perf_counter()
        model = fit_estimator(problem, est, lam, gamma, m, seed, cfg.sampling)
        t1 = time.perf_counter()
        pred = predict(model, problem.test.X)
        t2 = time.perf_counter()
        r = pred - problem.test.y
        row.update({"mse": float(np.mean(r * r)), "fit_seconds": t1 - t0, "predict_seconds": t2 - t1})
    except NumericalError as exc:
        row["status"] = f"failed at lambda={lam}, gamma={gamma}, m={m}: {exc}"
    return row


def _sort_key(row):
    return (row["seed"], row["n"], row["estimator"], row["m"],
            -1.0 if row["lambda"] is None else row["lambda"],
            -1.0 if row["gamma"] is None else row["gamma"])


def run_sweep(cfg: ExperimentConfig):
    cells = sweep_cells(cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(run_cell, [cfg] * len(cells), cells))
    else:
        rows = [run_cell(cfg, c) for c in cells]
    rows.sort(key=_sort_key)
    return rows


# ---------------------------------------------------------------- modes

def _out(cfg, name):
    os.makedirs(cfg.output, exist_ok=True)
    return os.path.join(cfg.output, name)


def _dump(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, default=float)


def _simulate(cfg):
    if cfg.simulation is None:
        raise InputError("SIMULATE needs a 'simulation' block")
    written = []
    pairs = [(s, n) for s in cfg.seeds for n in cfg.n_values]
    for seed, n in pairs:
        prefix = "" if len(pairs) == 1 else f"seed{seed}_n{n}_"
        p = _load_problem(cfg, seed, n, need_weights=False)
        for name, data in (("train.csv", p.train), ("test.csv", p.test)):
            write_dataset_csv(_out(cfg, prefix + name), data)
            written.append(_out(cfg, prefix + name))
        write_weights_csv(_out(cfg, prefix + "weights.csv"), p.weight_fn(p.train.X))
        written.append(_out(cfg, prefix + "weights.csv"))
    return {"files": written}


def _fit(cfg):
    seed = cfg.seeds[0]
    est = cfg.estimators[0]
    m = cfg.m if cfg.m is not None else cfg.m_grid[0]
    problem = _load_problem(cfg, seed)
    lam, gamma, cv = _select(cfg, problem, est, m, seed)
    model = fit_estimator(problem, est, lam, gamma, m, seed, cfg.sampling)
    model.save(_out(cfg, "model.json"))
    report = {"estimator": est, "weight_source": cfg.weight_source, "seed": seed,
              "lambda": lam, "gamma": gamma, "n": problem.train.n,
              "m": model.centers.shape[0]}
    if cv is not None:
        report["cv_table"] = cv.table
    if problem.test is not None and problem.test.y is not None:
        r = predict(model, problem.test.X) - problem.test.y
        report["test_mse"] = float(np.mean(r * r))
    _dump(_out(cfg, "fit_report.json"), report)
    return report


def _predict(cfg):
    model = FittedModel.load(cfg.model_path)
    test = read_dataset_csv(cfg.test_path)
    if test.dim != model.centers.shape[1]:
        raise InputError(f"{cfg.test_path}: {test.dim} features, model expects {model.centers.shape[1]}")
    pred = predict(model, test.X)
    write_predictions_csv(_out(cfg, "predictions.csv"), pred)
    report = {"n": test.n}
    if test.y is not None:
        report["mse"] = float(np.mean((pred - test.y) ** 2))
    _dump(_out(cfg, "predict_report.json"), report)
    return report


def _weights(cfg):
    seed = cfg.seeds[0]
    problem = _load_problem(cfg, seed)
    w = problem.weights
    write_weights_csv(_out(cfg, "weights.csv"), w)
    report = {"weight_source": cfg.weight_source, "seed": seed, "n": len(w),
              "mean": float(np.mean(w)), "max": float(np.max(w)), "min": float(np.min(w))}
    if problem.weight_fn is not None:
        exact = problem.weight_fn(problem.train.X)
        report["correlation_with_exact"] = float(np.corrcoef(w, exact)[0, 1]) \
            if np.std(w) > 0 else None
    _dump(_out(cfg, "weights_report.json"), report)
    return report


def _diagnose(cfg):
    seed = cfg.seeds[0]
    problem = _load_problem(cfg, seed)
    train, w = problem.train, problem.weights
    lam, gamma, _ = _select(cfg, problem, "WKRR", None, seed)
    spec = KernelSpec(gamma)
    m = cfg.m if cfg.m is not None else cfg.m_grid[0]
    n = train.n

    approx = approx_leverage_scores(train, spec, lam, m0=min(256, n), seed=seed)
    report = {"seed": seed, "n": n, "lambda": lam, "gamma": gamma,
              "leverage": {"exact": n <= EXACT_LEVERAGE_LIMIT, "floored": approx.floored}}
    if n <= EXACT_LEVERAGE_LIMIT:
        K = gram(spec, train.X, train.X)
        exact = exact_leverage_scores(K, lam)
        exact.to_csv(_out(cfg, "leverage.csv"))
        sw = np.sqrt(w)
        report["effective_dimension"] = float(exact.scores.sum())
        report["weighted_effective_dimension"] = empirical_effective_dimension(
            sw[:, None] * K * sw[None, :], lam)
        report["leverage"]["approximation_factor"] = approximation_factor(approx, exact)
        dom = covariance_domination_check(K, w, np.ones(n))
        report["covariance_domination"] = {"ratio_sup": dom.ratio_sup,
                                           "top_eigenvalue": dom.top_eigenvalue,
                                           "tolerance": dom.tolerance, "passed": dom.passed}
        basis = nystrom_basis(train, spec, lam, m, seed, cfg.sampling)
        proj = projection_residual(train, spec, basis, lam)
        report["projection"] = {"m": basis.m, "residual": proj.residual,
                                "regularized": proj.regularized, "reference": proj.reference,
                                "within_reference": proj.within_reference}
    else:
        approx.to_csv(_out(cfg, "leverage.csv"))
        report["effective_dimension"] = float(approx.scores.sum())
    report["moments"] = [
        {"q": q, "p": p, "value": r.value, "essential_sup": r.essential_sup}
        for q in (0.0, 0.5, 1.0) for p in (2, 3)
        for r in [moment_diagnostic(w, q, p)]
    ]
    _dump(_out(cfg, "diagnose.json"), report)
    return report


def run_experiment(cfg: ExperimentConfig):
    """Run ``cfg.mode`` and return a summary dict; files go to ``cfg.output``."""
    if cfg.mode == "SWEEP":
        rows = run_sweep(cfg)
        path = _out(cfg, "results.csv")
        write_results_csv(path, rows)
        failed = sum(r["status"] != "ok" for r in rows)
        if rows and failed == len(rows):
            raise NumericalError("every sweep cell failed; see " + path)
        return {"rows": len(rows), "failed": failed, "path": path}
    handler = {"SIMULATE": _simulate, "FIT": _fit, "PREDICT": _predict,
               "WEIGHTS": _weights, "DIAGNOSE": _diagnose}[cfg.mode]
    return handler(cfg)
