"""Importance-weight functions: exact Gaussian ratios, RuLSIF, clipping.

Every weight function is a callable mapping an ``(n, d)`` array of points
to ``n`` nonnegative weights.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InputError
from .kernel import KernelSpec, as_points, gram
from .sampling import make_rng

STREAM_RULSIF = 11
RULSIF_LAMBDA_GRID = tuple(10.0 ** np.arange(-4, 1.5, 0.5))


@dataclass(frozen=True)
class GaussianParams:
    mean: np.ndarray
    cov_diag: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        cov = np.atleast_1d(np.asarray(self.cov_diag, dtype=np.float64))
        if mean.shape != cov.shape or mean.ndim != 1:
            raise InputError("mean and diagonal covariance must have the same length")
        if np.any(cov <= 0) or not np.all(np.isfinite(cov)):
            raise InputError("covariance entries must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov_diag", cov)

    @property
    def dim(self):
        return len(self.mean)

    def log_density(self, X):
        X = as_points(X)
        if X.shape[1] != self.dim:
            raise InputError(f"expected {self.dim} features, got {X.shape[1]}")
        z = (X - self.mean) ** 2 / self.cov_diag
        return -0.5 * (z.sum(axis=1) + np.log(2 * np.pi * self.cov_diag).sum())

    def sample(self, n, rng):
        return self.mean + np.sqrt(self.cov_diag) * rng.standard_normal((n, self.dim))


class WeightFunction:
    kind = None

    def __call__(self, X):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantWeight(WeightFunction):
    value: float = 1.0
    kind = "CONSTANT"

    def __post_init__(self):
        if not (np.isfinite(self.value) and self.value >= 0):
            raise InputError("constant weight must be finite and nonnegative")

    def __call__(self, X):
        return np.full(as_points(X).shape[0], float(self.value))


@dataclass(frozen=True)
class GaussianRatioWeight(WeightFunction):
    """Exact density ratio ``p_te(x) / p_tr(x)`` of two diagonal Gaussians."""

    tr: GaussianParams
    te: GaussianParams
    kind = "GAUSSIAN_RATIO"

    def __post_init__(self):
        if self.tr.dim != self.te.dim:
            raise InputError("train and test Gaussians differ in dimension")

    def __call__(self, X):
        return np.exp(self.te.log_density(X) - self.tr.log_density(X))


@dataclass(frozen=True)
class RulsifWeight(WeightFunction):
    """``max(0, sum_l theta_l K(x, c_l))`` from a RuLSIF fit."""

    centers: np.ndarray
    theta: np.ndarray
    gamma: float
    alpha: float
    lam: float
    kind = "RULSIF"

    def __call__(self, X):
        K = gram(KernelSpec(self.gamma), X, self.centers)
        return np.maximum(K @ self.theta, 0.0)


@dataclass(frozen=True)
class ClippedWeight(WeightFunction):
    inner: WeightFunction
    threshold: float
    kind = "CLIPPED"

    def __call__(self, X):
        return np.minimum(self.inner(X), self.threshold)


def gaussian_ratio_weight(tr: GaussianParams, te: GaussianParams, x):
    """Density ratio at one point (scalar) or at each row of a matrix."""
    x = np.asarray(x, dtype=np.float64)
    w = GaussianRatioWeight(tr, te)(x)
    return float(w[0]) if x.ndim <= 1 else w


def clip_weights(w: WeightFunction, threshold) -> WeightFunction:
    if not (np.isfinite(threshold) and threshold > 0):
        raise InputError(f"clipping threshold must be positive, got {threshold}")
    if isinstance(w, ClippedWeight):
        # clip(clip(w, a), b) == clip(w, min(a, b))
        return ClippedWeight(w.inner, min(w.threshold, float(threshold)))
    return ClippedWeight(w, float(threshold))


def median_heuristic_gamma(*samples, max_points=1000, seed=0):
    """``1 / (2 * median squared pairwise distance)`` over the pooled samples."""
    X = np.vstack([as_points(s) for s in samples])
    if X.shape[0] > max_points:
        rng = make_rng(seed, STREAM_RULSIF, 1)
        X = X[rng.choice(X.shape[0], size=max_points, replace=False)]
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2 * X @ X.T
    d2 = d2[np.triu_indices(X.shape[0], k=1)]
    med = np.median(np.clip(d2, 0.0, None))
    if not med > 0:
        return 1.0
    return 1.0 / (2.0 * med)


def _rulsif_moments(Phi_tr, Phi_te, alpha):
    H = (alpha / Phi_te.shape[0]) * Phi_te.T @ Phi_te
    H += ((1 - alpha) / Phi_tr.shape[0]) * Phi_tr.T @ Phi_tr
    h = Phi_te.mean(axis=0)
    return H, h


def _rulsif_theta(H, h, lam):
    A = H + lam * np.eye(H.shape[0])
    return linalg.solve(A, h, assume_a="pos", check_finite=False)


def _rulsif_score(theta, Phi_tr, Phi_te, alpha):
    # held-out relative Pearson objective (lower is better)
    f_tr = Phi_tr @ theta
    f_te = Phi_te @ theta
    return (alpha / 2 * np.mean(f_te**2) + (1 - alpha) / 2 * np.mean(f_tr**2)
            - np.mean(f_te))


def fit_rulsif(tr_X, te_X, alpha=0.1, centers_k=None, gamma_w=None, lambda_w=None,
               seed=0, folds=5, lambda_grid=RULSIF_LAMBDA_GRID) -> RulsifWeight:
    """Fit the alpha-relative density ratio ``p_te / (alpha p_te + (1-alpha) p_tr)``.

    Kernel centers are drawn uniformly from ``te_X``. ``gamma_w`` defaults
    to the median heuristic and ``lambda_w`` to the minimizer of the
    held-out objective under ``folds``-fold cross-validation.
    """
    tr_X = as_points(tr_X, "tr_X")
    te_X = as_points(te_X, "te_X")
    if tr_X.shape[1] != te_X.shape[1]:
        raise InputError("train and test samples differ in dimension")
    if not 0 <= alpha < 1:
        raise InputError("alpha must lie in [0, 1)")
    n_te = te_X.shape[0]
    k = min(100, n_te) if centers_k is None else int(centers_k)
    if not 1 <= k <= n_te:
        raise InputError(f"centers_k must be in [1, {n_te}]")
    if gamma_w is None:
        gamma_w = median_heuristic_gamma(tr_X, te_X, seed=seed)
    if gamma_w <= 0:
        raise InputError("gamma_w must be positive")

    rng = make_rng(seed, STREAM_RULSIF)
    centers = te_X[np.sort(rng.choice(n_te, size=k, replace=False))]
    spec = KernelSpec(gamma_w)
    Phi_tr = gram(spec, tr_X, centers)
    Phi_te = gram(spec, te_X, centers)

    if lambda_w is None:
        lambda_w = _select_lambda(Phi_tr, Phi_te, alpha, folds, lambda_grid, rng)
    elif lambda_w <= 0:
        raise InputError("lambda_w must be positive")

    H, h = _rulsif_moments(Phi_tr, Phi_te, alpha)
    theta = _rulsif_theta(H, h, lambda_w)
    return RulsifWeight(centers, theta, float(gamma_w), float(alpha), float(lambda_w))


def _select_lambda(Phi_tr, Phi_te, alpha, folds, grid, rng):
    folds = max(2, min(folds, Phi_tr.shape[0], Phi_te.shape[0]))
    fold_tr = rng.permutation(Phi_tr.shape[0]) % folds
    fold_te = rng.permutation(Phi_te.shape[0]) % folds
    scores = np.zeros(len(grid))
    for f in range(folds):
        H, h = _rulsif_moments(Phi_tr[fold_tr != f], Phi_te[fold_te != f], alpha)
        for j, lam in enumerate(grid):
            theta = _rulsif_theta(H, h, lam)
            scores[j] += _rulsif_score(theta, Phi_tr[fold_tr == f], Phi_te[fold_te == f], alpha)
    return float(grid[int(np.argmin(scores))])


@dataclass(frozen=True)
class MomentReport:
    value: float
    q: float
    p: int
    essential_sup: bool
    reference: float | None = None

    @property
    def within_reference(self):
        return None if self.reference is None else self.value <= self.reference


def moment_diagnostic(w_values, q, p, W=None, sigma2=None) -> MomentReport:
    """Plug-in estimate of the weight-moment condition from training weights.

    Estimates ``(E_te[w^((p-1)/q)])^q`` as ``(mean_i w_i^((p-1)/q + 1))^q``
    over training-sample weights. For ``q = 0`` the essential supremum
    ``max(w)^(p-1)`` is used instead. When ``W`` and ``sigma2`` are given
    the report also carries ``p! W^(p-2) sigma2 / 2`` for comparison.
    """
    w = np.asarray(w_values, dtype=np.float64).ravel()
    if w.size == 0 or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InputError("weights must be a nonempty nonnegative vector")
    if int(p) != p or p < 2:
        raise InputError("p must be an integer >= 2")
    if not 0 <= q <= 1:
        raise InputError("q must lie in [0, 1]")
    if q == 0:
        value = float(np.max(w) ** (p - 1))
    else:
        value = float(np.mean(w ** ((p - 1) / q + 1)) ** q)
    reference = None
    if W is not None and sigma2 is not None:
        reference = 0.5 * math.factorial(int(p)) * W ** (p - 2) * sigma2
    return MomentReport(value, float(q), int(p), q == 0, reference)
