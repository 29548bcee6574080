"""RBF kernel evaluation and Gram-matrix assembly.

The kernel is parameterized as ``K(x, x') = exp(-gamma * ||x - x'||^2)``,
so ``gamma`` is an inverse squared length-scale.
"""
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import InputError

# rows per panel; bounds the temporary memory of a single backend call
PANEL_ROWS = 2048


@dataclass(frozen=True)
class KernelSpec:
    gamma: float
    family: str = "RBF"

    def __post_init__(self):
        if self.family != "RBF":
            raise InputError(f"unsupported kernel family {self.family!r}")
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise InputError(f"gamma must be positive, got {self.gamma}")


def as_points(X, name="points"):
    """Return ``X`` as a C-contiguous float64 matrix (1-D input is one point)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError(f"{name} must be a nonempty 2-D array, got shape {X.shape}")
    return X


def _check_dims(A, B):
    if A.shape[1] != B.shape[1]:
        raise InputError(
            f"feature dimension mismatch: {A.shape[1]} vs {B.shape[1]}"
        )


def eval_kernel(spec: KernelSpec, x, x2) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    x2 = np.asarray(x2, dtype=np.float64).ravel()
    if x.shape != x2.shape:
        raise InputError(f"dimension mismatch: {x.shape[0]} vs {x2.shape[0]}")
    d = x - x2
    return float(np.exp(-spec.gamma * np.dot(d, d)))


def gram(spec: KernelSpec, rows, cols) -> np.ndarray:
    """Kernel matrix with entry (i, j) = K(rows_i, cols_j).

    Rows are processed in panels of ``PANEL_ROWS`` so an n x m matrix is
    built without any n x n intermediate.
    """
    rows = as_points(rows, "rows")
    cols = as_points(cols, "cols")
    _check_dims(rows, cols)
    n = rows.shape[0]
    if n <= PANEL_ROWS:
        return _backend.rbf_gram(rows, cols, spec.gamma)
    out = np.empty((n, cols.shape[0]))
    for start in range(0, n, PANEL_ROWS):
        stop = min(start + PANEL_ROWS, n)
        out[start:stop] = _backend.rbf_gram(rows[start:stop], cols, spec.gamma)
    return out


def kernel_matvec(spec: KernelSpec, points, centers, coef) -> np.ndarray:
    """Evaluate ``sum_i coef_i K(centers_i, x)`` at every row of ``points``."""
    points = as_points(points)
    centers = as_points(centers, "centers")
    _check_dims(points, centers)
    coef = np.ascontiguousarray(coef, dtype=np.float64)
    if coef.shape != (centers.shape[0],):
        raise InputError("coefficient vector length must match the number of centers")
    n = points.shape[0]
    if n <= PANEL_ROWS:
        return _backend.rbf_predict(points, centers, coef, spec.gamma)
    out = np.empty(n)
    for start in range(0, n, PANEL_ROWS):
        stop = min(start + PANEL_ROWS, n)
        out[start:stop] = _backend.rbf_predict(points[start:stop], centers, coef, spec.gamma)
    return out
