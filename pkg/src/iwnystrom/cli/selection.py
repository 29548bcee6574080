"""Hyperparameter grids and hold-out model selection."""
from dataclasses import dataclass

import numpy as np

from ..errors import InputError, NumericalError
from ..estimators import fit_path, predict
from ..kernel import KernelSpec
from ..sampling import als_basis, make_rng, sample_uniform

ESTIMATORS = ("KRR", "WKRR", "NYSTROM_WKRR")
STREAM_CV = 31


def geometric_grid(lambda_min, lambda_max, Q):
    """``Q`` values from ``lambda_min`` to ``lambda_max`` with a constant ratio."""
    if int(Q) != Q or Q < 2:
        raise InputError("Q must be an integer >= 2")
    if not (0 < lambda_min < lambda_max):
        raise InputError("need 0 < lambda_min < lambda_max")
    b = (lambda_max / lambda_min) ** (1.0 / (Q - 1))
    grid = lambda_min * b ** np.arange(Q)
    grid[-1] = lambda_max
    return grid


def gamma_grid():
    """RBF grid 1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1."""
    out = []
    for k in range(1, 7):
        if k % 2:
            out.append(10.0 ** (-3 + (k - 1) / 2))
        else:
            out.append(5 * 10.0 ** (-3 + (k - 2) / 2))
    return np.array(out)


@dataclass(frozen=True)
class CVResult:
    best_lambda: float
    best_gamma: float
    table: list  # dicts with lambda, gamma, val_mse, status

    def best_row(self):
        return next(r for r in self.table
                    if r["lambda"] == self.best_lambda and r["gamma"] == self.best_gamma)


def split_indices(n, fraction, seed):
    if not 0 < fraction < 1:
        raise InputError("fraction must lie in (0, 1)")
    n_fit = int(round(fraction * n))
    if n_fit < 1 or n_fit >= n:
        raise InputError(f"cannot split {n} points with fraction {fraction}")
    perm = make_rng(seed, STREAM_CV).permutation(n)
    return np.sort(perm[:n_fit]), np.sort(perm[n_fit:])


def nystrom_basis(train, spec, lam, m, seed, sampling="ALS"):
    m = min(int(m), train.n)
    if sampling == "ALS":
        return als_basis(train, spec, lam, m, seed)
    if sampling == "UNIFORM":
        return sample_uniform(train.n, m, seed)
    raise InputError(f"unknown sampling method {sampling!r}")


def holdout_cv(train, weights, estimator, lambda_grid, gamma_grid, m=None, fraction=0.7,
               seed=0, weighted_validation=True, sampling="ALS") -> CVResult:
    """Grid search over ``(lambda, gamma)`` on a single hold-out split.

    Models are fitted on a ``fraction`` of ``train`` and scored by the
    importance-weighted MSE ``mean(w_i r_i^2)`` on the rest (plain MSE when
    ``weighted_validation`` is False). For ``KRR`` the weights enter only
    the validation score. The Nystrom basis is drawn once per ``gamma``
    with leverage scores at the smallest ``lambda``. Ties go to the larger
    ``lambda``, then the smaller ``gamma``.
    """
    if estimator not in ESTIMATORS:
        raise InputError(f"unknown estimator {estimator!r}")
    lambdas = np.unique(np.asarray(lambda_grid, dtype=np.float64))
    gammas = np.unique(np.asarray(gamma_grid, dtype=np.float64))
    if lambdas.size == 0 or gammas.size == 0:
        raise InputError("hyperparameter grids must be nonempty")
    if estimator == "NYSTROM_WKRR" and m is None:
        raise InputError("the Nystrom estimator needs m")
    w = np.asarray(weights, dtype=np.float64)
    fit_idx, val_idx = split_indices(train.n, fraction, seed)
    fit_set, val_set = train.subset(fit_idx), train.subset(val_idx)
    w_fit = np.ones(fit_set.n) if estimator == "KRR" else w[fit_idx]
    w_val = w[val_idx] if weighted_validation else np.ones(val_set.n)

    table = []
    for gamma in gammas:
        spec = KernelSpec(float(gamma))
        try:
            basis = None
            if estimator == "NYSTROM_WKRR":
                basis = nystrom_basis(fit_set, spec, lambdas[0], m, seed, sampling)
            models = fit_path(fit_set, w_fit, spec, lambdas, basis=basis)
        except NumericalError as exc:
            table.extend({"lambda": float(lam), "gamma": float(gamma), "val_mse": np.nan,
                          "status": f"failed: {exc}"} for lam in lambdas)
            continue
        for lam, model in zip(lambdas, models):
            r = predict(model, val_set.X) - val_set.y
            table.append({"lambda": float(lam), "gamma": float(gamma),
                          "val_mse": float(np.mean(w_val * r * r)), "status": "ok"})

    ok = [r for r in table if r["status"] == "ok" and np.isfinite(r["val_mse"])]
    if not ok:
        raise NumericalError("every hyperparameter cell failed")
    best = min(ok, key=lambda r: (r["val_mse"], -r["lambda"], r["gamma"]))
    return CVResult(best["lambda"], best["gamma"], table)
