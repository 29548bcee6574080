"""Nystrom center selection and effective-dimension computations.

Leverage scores at regularization ``t`` are ``l_i(t) = (K (K + t n I)^{-1})_ii``.
Their sum is the empirical effective dimension.

Indices are 0-based throughout.
"""
import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InputError
from .estimators import whitening
from .kernel import KernelSpec, gram

DEFAULT_LAMBDA0 = 1e-6
DEFAULT_DICTIONARY = 256

# independent random streams derived from one user seed
STREAM_UNIFORM = 1
STREAM_ALS = 2
STREAM_DICTIONARY = 3


def make_rng(seed, *stream):
    """Counter-based (Philox) generator keyed by ``seed`` and a stream id."""
    if seed < 0:
        raise InputError("seeds must be nonnegative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *stream])))


@dataclass(frozen=True)
class NystromBasis:
    indices: np.ndarray
    m_requested: int
    method: str
    seed: int

    @property
    def m(self):
        return len(self.indices)


@dataclass(frozen=True)
class LeverageProfile:
    t: float
    scores: np.ndarray
    exact: bool
    # True when scores were requested below lambda0 and computed at lambda0
    floored: bool = False

    @property
    def n(self):
        return len(self.scores)

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "score"])
            for i, s in enumerate(self.scores):
                writer.writerow([i, repr(float(s))])


def _check_positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise InputError(f"{name} must be positive, got {value}")


def _psd_eigh(K):
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InputError("expected a square matrix")
    s, U = linalg.eigh(0.5 * (K + K.T), check_finite=False)
    return np.clip(s, 0.0, None), U


def exact_leverage_scores(K, t) -> LeverageProfile:
    _check_positive("t", t)
    s, U = _psd_eigh(K)
    n = K.shape[0]
    filt = s / (s + t * n)
    scores = (U * U) @ filt
    return LeverageProfile(float(t), np.clip(scores, 0.0, 1.0), exact=True)


def approx_leverage_scores(train, spec: KernelSpec, t, m0=DEFAULT_DICTIONARY, seed=0,
                           lambda0=DEFAULT_LAMBDA0) -> LeverageProfile:
    """Leverage scores from Nystrom features on a uniform dictionary.

    A dictionary of ``m0`` distinct points is drawn uniformly without
    replacement; each point gets features ``phi_i`` with
    ``phi_i . phi_j ~= K(x_i, x_j)`` and score
    ``phi_i^T (Phi^T Phi + t n I)^{-1} phi_i``. Scores are clipped to
    ``[1/n^2, 1]``. With ``m0 = n`` the exact scores are recovered.
    """
    _check_positive("t", t)
    X = getattr(train, "X", train)
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not (1 <= m0 <= n):
        raise InputError(f"dictionary size must be in [1, {n}], got {m0}")
    floored = t < lambda0
    t_eff = max(t, lambda0)
    rng = make_rng(seed, STREAM_DICTIONARY)
    dictionary = np.sort(rng.choice(n, size=m0, replace=False))
    Knj = gram(spec, X, X[dictionary])
    Phi = Knj @ whitening(Knj[dictionary])
    G = Phi.T @ Phi + (t_eff * n) * np.eye(Phi.shape[1])
    factor = linalg.cho_factor(G, lower=True, check_finite=False)
    scores = np.einsum("ij,ji->i", Phi, linalg.cho_solve(factor, Phi.T, check_finite=False))
    scores = np.clip(scores, 1.0 / n**2, 1.0)
    return LeverageProfile(float(t_eff), scores, exact=False, floored=floored)


def approximation_factor(approx: LeverageProfile, exact: LeverageProfile) -> float:
    """Smallest ``T`` with ``l/T <= l_hat <= T l`` for every index."""
    a, e = approx.scores, exact.scores
    with np.errstate(divide="ignore"):
        ratio = np.maximum(a / e, e / a)
    return float(np.max(ratio))


def _make_basis(draws, m, method, seed):
    return NystromBasis(np.unique(draws).astype(np.intp), int(m), method, int(seed))


def sample_uniform(n, m, seed) -> NystromBasis:
    """``m`` uniform draws with replacement from ``range(n)``, deduplicated."""
    if not (1 <= m <= n):
        raise InputError(f"m must be in [1, {n}], got {m}")
    rng = make_rng(seed, STREAM_UNIFORM)
    return _make_basis(rng.integers(0, n, size=m), m, "UNIFORM", seed)


def als_draws(profile: LeverageProfile, m, seed) -> np.ndarray:
    """The raw ``m`` draws behind :func:`sample_als`, before deduplication."""
    scores = np.asarray(profile.scores, dtype=np.float64)
    if m < 1:
        raise InputError("m must be at least 1")
    if np.any(scores < 0) or not np.isfinite(scores).all():
        raise InputError("scores must be finite and nonnegative")
    total = scores.sum()
    if not total > 0:
        raise InputError("scores must have a positive sum")
    rng = make_rng(seed, STREAM_ALS)
    return rng.choice(len(scores), size=m, replace=True, p=scores / total)


def sample_als(profile: LeverageProfile, m, seed) -> NystromBasis:
    """``m`` draws with replacement with probability proportional to the scores."""
    return _make_basis(als_draws(profile, m, seed), m, "ALS", seed)


def als_basis(train, spec, lam, m, seed, m0=DEFAULT_DICTIONARY):
    """Approximate leverage scores at ``lam`` followed by ALS sampling."""
    n = getattr(train, "n", None) or len(train)
    profile = approx_leverage_scores(train, spec, lam, m0=min(m0, n), seed=seed)
    return sample_als(profile, m, seed)


def empirical_effective_dimension(K_w, lam) -> float:
    """``trace(K_w (K_w + n lam I)^{-1})`` for a (weighted) Gram matrix."""
    _check_positive("lambda", lam)
    K_w = np.asarray(K_w, dtype=np.float64)
    n = K_w.shape[0]
    A = 0.5 * (K_w + K_w.T) + (n * lam) * np.eye(n)
    factor = linalg.cho_factor(A, lower=True, check_finite=False)
    # K (K + c I)^{-1} = I - c (K + c I)^{-1}
    inv_diag = np.diag(linalg.cho_solve(factor, np.eye(n), check_finite=False))
    return float(n - n * lam * inv_diag.sum())


def effective_dimension_from_spectrum(eigs, lam) -> float:
    _check_positive("lambda", lam)
    eigs = np.asarray(eigs, dtype=np.float64)
    if np.any(eigs < 0):
        raise InputError("eigenvalues must be nonnegative")
    return float(np.sum(eigs / (eigs + lam)))


def nystrom_size_schedule(lam, gamma_cap, Q, T, n, delta, cap=True) -> int:
    """Subspace size ``ceil(144 T^2 Q lam^-gamma log(8 n / delta))``, capped at ``n``.

    Pass ``cap=False`` for the raw bound.
    """
    _check_positive("lambda", lam)
    _check_positive("Q", Q)
    if not 0 <= gamma_cap <= 1:
        raise InputError("capacity exponent must lie in [0, 1]")
    if T < 1:
        raise InputError("T must be at least 1")
    if n < 1 or int(n) != n:
        raise InputError("n must be a positive integer")
    if not 0 < delta < 1:
        raise InputError("delta must lie in (0, 1)")
    m = math.ceil(144.0 * T * T * Q * lam ** (-gamma_cap) * math.log(8.0 * n / delta))
    return int(min(m, n)) if cap else int(m)
