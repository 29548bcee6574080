"""Synthetic covariate-shift regression problem and evaluation diagnostics.

Training inputs follow one diagonal Gaussian, test inputs another. Targets
come from ``g(x) = c1 * exp(-c2 / ||x||^(2k))``, with Gaussian noise on the
training targets only.
"""
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg

from .errors import InputError
from .estimators import FittedModel, NystromFeatures, SampleSet, basis_indices, predict
from .kernel import KernelSpec, gram
from .sampling import make_rng
from .weights import GaussianParams, GaussianRatioWeight

STREAM_TRAIN_X = 21
STREAM_NOISE = 22
STREAM_TEST_X = 23


@dataclass
class SimulationConfig:
    k: int = 50
    c1: float = 10.0
    c2: float = 10.0
    mu_tr: tuple = (0.7, 0.7)
    cov_tr_diag: tuple = (0.7, 0.7)
    mu_te: tuple = (1.8, 1.8)
    cov_te_diag: tuple = (0.5, 0.5)
    noise_var: float = 0.2
    n_train: int = 1000
    n_test: int = 1000
    seed: int = 0

    def __post_init__(self):
        for name in ("mu_tr", "cov_tr_diag", "mu_te", "cov_te_diag"):
            setattr(self, name, tuple(float(v) for v in np.atleast_1d(getattr(self, name))))
        self.validate()

    def validate(self):
        dims = {len(self.mu_tr), len(self.cov_tr_diag), len(self.mu_te), len(self.cov_te_diag)}
        if len(dims) != 1:
            raise InputError("means and covariances must share one dimension")
        if int(self.k) != self.k or self.k < 1:
            raise InputError("k must be a positive integer")
        if self.c1 <= 0 or self.c2 <= 0:
            raise InputError("c1 and c2 must be positive")
        if min(self.cov_tr_diag + self.cov_te_diag) <= 0:
            raise InputError("covariance entries must be positive")
        if self.noise_var < 0:
            raise InputError("noise variance must be nonnegative")
        if self.n_train < 1 or self.n_test < 1:
            raise InputError("sample sizes must be positive")
        if self.seed < 0:
            raise InputError("seed must be nonnegative")

    @property
    def train_dist(self):
        return GaussianParams(self.mu_tr, self.cov_tr_diag)

    @property
    def test_dist(self):
        return GaussianParams(self.mu_te, self.cov_te_diag)

    def to_dict(self):
        d = asdict(self)
        for key in ("mu_tr", "cov_tr_diag", "mu_te", "cov_te_diag"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InputError(f"unknown simulation fields: {sorted(unknown)}")
        return cls(**d)


def target_function(x, c1=10.0, c2=10.0, k=50):
    """``c1 * exp(-c2 / ||x||^(2k))`` row-wise; 0 where ``||x||^(2k)`` underflows."""
    if c1 <= 0 or c2 <= 0 or k < 1:
        raise InputError("need c1 > 0, c2 > 0, k >= 1")
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim <= 1
    X = np.atleast_2d(x)
    r2 = np.sum(X * X, axis=1)
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        p = r2 ** int(k)
        out = np.where(p > 0, c1 * np.exp(-c2 / np.where(p > 0, p, 1.0)), 0.0)
    return float(out[0]) if scalar else out


def generate_dataset(cfg: SimulationConfig):
    """Return ``(train, test, exact_weights)`` fully determined by ``cfg.seed``."""
    cfg.validate()
    tr, te = cfg.train_dist, cfg.test_dist
    X_tr = tr.sample(cfg.n_train, make_rng(cfg.seed, STREAM_TRAIN_X))
    noise = np.sqrt(cfg.noise_var) * make_rng(cfg.seed, STREAM_NOISE).standard_normal(cfg.n_train)
    X_te = te.sample(cfg.n_test, make_rng(cfg.seed, STREAM_TEST_X))
    g = lambda X: target_function(X, cfg.c1, cfg.c2, cfg.k)  # noqa: E731
    train = SampleSet(X_tr, g(X_tr) + noise)
    test = SampleSet(X_te, g(X_te))
    return train, test, GaussianRatioWeight(tr, te)


def mse(model: FittedModel, test: SampleSet) -> float:
    y = test.require_targets()
    r = predict(model, test.X) - y
    return float(np.mean(r * r))


def _sqrt_psd(K):
    s, U = linalg.eigh(0.5 * (K + K.T), check_finite=False)
    return (U * np.sqrt(np.clip(s, 0.0, None))) @ U.T


@dataclass(frozen=True)
class DominationReport:
    ratio_sup: float
    top_eigenvalue: float
    tolerance: float

    @property
    def passed(self):
        return self.top_eigenvalue <= self.tolerance


def covariance_domination_check(K, w_values, v_values, rtol=1e-8) -> DominationReport:
    """Check ``Sigma_w <= ||w/v||_inf * Sigma_v`` for the empirical covariances.

    On the span of the sample, ``Sigma_w - G Sigma_v`` has the nonzero
    spectrum of ``K^(1/2) (D_w - G D_v) K^(1/2) / n``; its top eigenvalue
    must not exceed ``rtol * trace(G K_v) / n``.
    """
    K = np.asarray(K, dtype=np.float64)
    w = np.asarray(w_values, dtype=np.float64).ravel()
    v = np.asarray(v_values, dtype=np.float64).ravel()
    n = K.shape[0]
    if K.shape != (n, n) or w.shape != (n,) or v.shape != (n,):
        raise InputError("Gram matrix and weight vectors have mismatched sizes")
    if np.any(v <= 0):
        raise InputError("reference weights v must be positive")
    if np.any(w < 0):
        raise InputError("weights w must be nonnegative")
    G = float(np.max(w / v))
    R = _sqrt_psd(K)
    D = w - G * v
    M = (R * D) @ R / n
    top = float(linalg.eigvalsh(0.5 * (M + M.T), subset_by_index=[n - 1, n - 1],
                                check_finite=False)[0])
    tol = rtol * max(G * float(np.sum(v * np.diag(K))) / n, np.finfo(float).tiny)
    return DominationReport(G, top, tol)


@dataclass(frozen=True)
class ProjectionReport:
    residual: float          # ||(I - P_m) Sigma^(1/2)||^2 on the empirical covariance
    lam: float
    regularized: float = field(init=False)
    reference: float = field(init=False)

    def __post_init__(self):
        # ||(I - P) (Sigma + lam)^(1/2)||^2 = residual + lam
        object.__setattr__(self, "regularized", self.residual + self.lam)
        object.__setattr__(self, "reference", 6.0 * self.lam)

    @property
    def within_reference(self):
        return self.regularized <= self.reference


def projection_residual(train, spec: KernelSpec, basis, lam) -> ProjectionReport:
    """Top eigenvalue of ``(K - K_nm K_mm^+ K_mn) / n`` for the given basis."""
    if not lam > 0:
        raise InputError("lambda must be positive")
    X = getattr(train, "X", train)
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    idx = basis_indices(basis, n)
    feats = NystromFeatures(X, idx, spec)
    R = gram(spec, X, X) - feats.Phi @ feats.Phi.T
    top = linalg.eigvalsh(0.5 * (R + R.T), subset_by_index=[n - 1, n - 1], check_finite=False)[0]
    return ProjectionReport(max(float(top) / n, 0.0), float(lam))
