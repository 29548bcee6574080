"""Kernel ridge regression, importance-weighted KRR and its Nystrom variant.

All three estimators return a :class:`FittedModel` whose prediction is
``f(x) = sum_i coefficients_i * K(centers_i, x)``.

Regularization follows the empirical-risk convention

    (1/n) sum_i w_i (y_i - f(x_i))^2 + lam * ||f||_H^2,

so every linear system carries an ``n * lam`` ridge term.
"""
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import InputError, NumericalError
from .kernel import KernelSpec, as_points, gram, kernel_matvec

KINDS = ("KRR", "W-KRR", "NYSTROM-W-KRR")
JITTER_FLOOR = 1e-10
MAX_ESCALATIONS = 3


@dataclass(frozen=True)
class SampleSet:
    X: np.ndarray
    y: np.ndarray | None = None

    def __post_init__(self):
        X = as_points(self.X, "X")
        object.__setattr__(self, "X", X)
        if self.y is not None:
            y = np.ascontiguousarray(self.y, dtype=np.float64).ravel()
            if y.shape[0] != X.shape[0]:
                raise InputError(f"{X.shape[0]} rows but {y.shape[0]} targets")
            if not np.all(np.isfinite(y)):
                raise InputError("targets must be finite")
            object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    def subset(self, idx):
        idx = np.asarray(idx)
        return SampleSet(self.X[idx], None if self.y is None else self.y[idx])

    def require_targets(self):
        if self.y is None:
            raise InputError("sample set has no targets")
        return self.y


@dataclass(frozen=True)
class FittedModel:
    centers: np.ndarray
    coefficients: np.ndarray
    spec: KernelSpec
    lam: float
    kind: str
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown model kind {self.kind!r}")
        if self.coefficients.shape != (self.centers.shape[0],):
            raise InputError("one coefficient per center is required")

    def predict(self, points):
        return predict(self, points)

    def to_dict(self):
        return {
            "kind": self.kind,
            "gamma": self.spec.gamma,
            "lambda": self.lam,
            "centers": self.centers.tolist(),
            "coefficients": self.coefficients.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                centers=as_points(d["centers"], "centers"),
                coefficients=np.asarray(d["coefficients"], dtype=np.float64),
                spec=KernelSpec(float(d["gamma"])),
                lam=float(d["lambda"]),
                kind=d["kind"],
            )
        except KeyError as exc:
            raise InputError(f"model record is missing field {exc}") from None

    def save(self, path):
        # json writes floats with repr(), which round-trips exactly
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def default_jitter(A):
    dim = A.shape[0]
    scale = np.trace(A) / dim
    return JITTER_FLOOR * (scale if scale > 0 else 1.0)


def solve_psd(A, b, jitter=None, check=True):
    """Solve ``(A + jitter I) z = b`` for symmetric positive semidefinite ``A``.

    ``jitter=None`` first tries an unregularized Cholesky factorization.
    When factorization fails the jitter is raised to at least
    ``1e-10 * trace(A) / dim(A)`` and multiplied by 10 up to three times;
    after that the minimum-norm least-squares solution of ``A z = b`` is
    returned. ``check=False`` skips the symmetry test for callers that
    build ``A`` symmetric by construction.

    Raises
    ------
    InputError
        If ``A`` is not square and symmetric, or ``jitter < 0``.
    NumericalError
        If even the least-squares fallback is not finite.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"matrix must be square, got shape {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise InputError("right-hand side does not match the matrix size")
    if check and A.size:
        scale = max(float(np.max(np.abs(A))), 1.0)
        if float(np.max(np.abs(A - A.T))) > 1e-10 * scale:
            raise InputError("matrix must be symmetric")
    if jitter is not None and jitter < 0:
        raise InputError("jitter must be nonnegative")

    if not jitter:
        start = default_jitter(A)
        attempts = [0.0] + [start * 10.0**k for k in range(MAX_ESCALATIONS + 1)]
    else:
        attempts = [jitter * 10.0**k for k in range(MAX_ESCALATIONS + 1)]

    for j in attempts:
        try:
            factor = linalg.cho_factor(_add_diag(A, j) if j else A, lower=True,
                                       check_finite=False)
        except linalg.LinAlgError:
            continue
        z = linalg.cho_solve(factor, b, check_finite=False)
        if np.all(np.isfinite(z)):
            return z

    z, *_ = linalg.lstsq(A, b, cond=None, check_finite=False)
    if not np.all(np.isfinite(z)):
        raise NumericalError("singular system after pseudo-inverse fallback", jitter=attempts[-1])
    return z


def _add_diag(A, value):
    out = A.copy()
    out.flat[:: A.shape[0] + 1] += value
    return out


def _check_lambda(lam):
    if not (np.isfinite(lam) and lam > 0):
        raise InputError(f"lambda must be positive, got {lam}")


def check_weights(weights, n):
    w = np.ascontiguousarray(weights, dtype=np.float64).ravel()
    if w.shape[0] != n:
        raise InputError(f"expected {n} weights, got {w.shape[0]}")
    if not np.all(np.isfinite(w)):
        raise InputError("weights must be finite")
    if np.any(w < 0):
        raise InputError("weights must be nonnegative")
    if not np.any(w > 0):
        raise InputError("at least one weight must be positive")
    return w


def _weighted_gram(K, sw):
    return sw[:, None] * K * sw[None, :]


def _solve_weighted(Kw, sw, y, lam):
    # (M_w K + n lam I) c = M_w y  with  c = sqrt(w) * a  and
    # (K_w + n lam I) a = sqrt(w) * y  where K_w = sqrt(w) K sqrt(w)
    n = Kw.shape[0]
    a = solve_psd(_add_diag(Kw, n * lam), sw * y, jitter=0.0, check=False)
    return sw * a


def fit_wkrr(train: SampleSet, weights, spec: KernelSpec, lam: float) -> FittedModel:
    """Importance-weighted KRR.

    Solves ``(M_w K + n lam I) c = M_w y`` through the symmetric system in
    ``sqrt(w)``-scaled coordinates, so zero weights are allowed (their
    coefficients are exactly zero).
    """
    _check_lambda(lam)
    y = train.require_targets()
    w = check_weights(weights, train.n)
    return _fit_full(train, y, w, spec, lam, "W-KRR")


def fit_krr(train: SampleSet, spec: KernelSpec, lam: float) -> FittedModel:
    """Plain KRR, ``c = (K + n lam I)^{-1} y``."""
    _check_lambda(lam)
    y = train.require_targets()
    return _fit_full(train, y, np.ones(train.n), spec, lam, "KRR")


def _fit_full(train, y, w, spec, lam, kind):
    sw = np.sqrt(w)
    Kw = _weighted_gram(gram(spec, train.X, train.X), sw)
    coef = _solve_weighted(Kw, sw, y, lam)
    return FittedModel(train.X, coef, spec, float(lam), kind)


def basis_indices(basis, n):
    idx = np.asarray(getattr(basis, "indices", basis), dtype=np.intp).ravel()
    if idx.size == 0:
        raise InputError("Nystrom basis is empty")
    if idx.min() < 0 or idx.max() >= n:
        raise InputError("basis index out of range")
    return np.unique(idx)


# eigenvalues of K_mm below this multiple of eps * max_eig are treated as zero
RANK_RTOL = 2.0


def whitening(Kmm):
    """Return ``T`` with ``T^T K_mm T = I`` on the numerical range of ``K_mm``.

    Built from the eigendecomposition of ``K_mm``. Eigenvalues at or below
    ``RANK_RTOL * eps * max_eig`` (the eigensolver's own error level) are
    dropped, which realizes the pseudo-inverse when ``K_mm`` is singular.
    """
    s, U = linalg.eigh(0.5 * (Kmm + Kmm.T), check_finite=False)
    tol = RANK_RTOL * np.finfo(float).eps * max(s[-1], 0.0)
    keep = s > tol
    if not np.any(keep):
        raise NumericalError("Nystrom center Gram matrix is numerically zero")
    return U[:, keep] / np.sqrt(s[keep])


class NystromFeatures:
    """Whitened Nystrom features ``Phi = K_nm T`` (see :func:`whitening`)."""

    def __init__(self, X, idx, spec):
        self.idx = idx
        self.centers = X[idx]
        self.Knm = gram(spec, X, self.centers)
        self.T = whitening(self.Knm[idx])
        self.rank = self.T.shape[1]
        self.Phi = self.Knm @ self.T


def fit_nystrom_wkrr(train: SampleSet, weights, basis, spec: KernelSpec, lam: float,
                     solver="eig") -> FittedModel:
    """Importance-weighted KRR restricted to the span of the basis points.

    ``solver="eig"`` (default) solves in whitened coordinates of the
    subspace; ``solver="direct"`` solves
    ``(K_nm^T M_w K_nm + n lam K_mm) c = K_nm^T M_w y`` as written, with
    :func:`solve_psd`'s jitter and pseudo-inverse fallback. Both give the
    same function; the whitened system is far better conditioned.
    """
    _check_lambda(lam)
    y = train.require_targets()
    w = check_weights(weights, train.n)
    idx = basis_indices(basis, train.n)
    if solver == "eig":
        return _nystrom_from_features(NystromFeatures(train.X, idx, spec), w, y, spec, lam)
    if solver != "direct":
        raise InputError(f"unknown solver {solver!r}")
    centers = train.X[idx]
    Knm = gram(spec, train.X, centers)
    Kmm = Knm[idx]
    Kmm = 0.5 * (Kmm + Kmm.T)
    WK = w[:, None] * Knm
    A = Knm.T @ WK
    A = 0.5 * (A + A.T) + (train.n * lam) * Kmm
    coef = solve_psd(A, WK.T @ y)
    return FittedModel(centers, coef, spec, float(lam), "NYSTROM-W-KRR")


def _nystrom_from_features(feats, w, y, spec, lam):
    n = feats.Phi.shape[0]
    WPhi = w[:, None] * feats.Phi
    G = feats.Phi.T @ WPhi
    G = 0.5 * (G + G.T)
    beta = solve_psd(_add_diag(G, n * lam), WPhi.T @ y, jitter=0.0, check=False)
    return FittedModel(feats.centers, feats.T @ beta, spec, float(lam), "NYSTROM-W-KRR",
                       info={"rank": feats.rank})


def fit_path(train: SampleSet, weights, spec: KernelSpec, lambdas, basis=None):
    """Fit one model per value in ``lambdas``, sharing the kernel work.

    With ``basis=None`` the full weighted estimator is fitted, otherwise
    the Nystrom one. Models are returned in the order of ``lambdas``.
    """
    for lam in lambdas:
        _check_lambda(lam)
    y = train.require_targets()
    w = check_weights(weights, train.n)
    if basis is None:
        sw = np.sqrt(w)
        Kw = _weighted_gram(gram(spec, train.X, train.X), sw)
        kind = "KRR" if np.all(w == 1.0) else "W-KRR"
        return [FittedModel(train.X, _solve_weighted(Kw, sw, y, lam), spec, float(lam), kind)
                for lam in lambdas]
    feats = NystromFeatures(train.X, basis_indices(basis, train.n), spec)
    return [_nystrom_from_features(feats, w, y, spec, lam) for lam in lambdas]


def predict(model: FittedModel, points) -> np.ndarray:
    return kernel_matvec(model.spec, points, model.centers, model.coefficients)


def weighted_risk(model: FittedModel, data: SampleSet, weights=None) -> float:
    """Weighted mean squared residual, the data term of the weighted risk."""
    y = data.require_targets()
    r = predict(model, data.X) - y
    if weights is None:
        return float(np.mean(r * r))
    w = np.asarray(weights, dtype=np.float64)
    return float(np.mean(w * r * r))
