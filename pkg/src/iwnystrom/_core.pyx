# cython: language_level=3
"""Compiled RBF kernels.

Both routines evaluate exp(-gamma * ||x - z||^2) from explicit coordinate
differences, so K(x, x) is exactly 1 and no cancellation occurs.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def rbf_gram(const double[:, ::1] X, const double[:, ::1] Z, double gamma):
    cdef Py_ssize_t n = X.shape[0], m = Z.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] K = out
    with nogil:
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for k in range(d):
                    diff = X[i, k] - Z[j, k]
                    acc = acc + diff * diff
                K[i, j] = exp(-gamma * acc)
    return out


def rbf_predict(const double[:, ::1] X, const double[:, ::1] C,
                const double[::1] coef, double gamma):
    """Fused sum_i coef_i K(C_i, x) for every row x of X."""
    cdef Py_ssize_t n = X.shape[0], m = C.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, diff, s
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] f = out
    with nogil:
        for i in range(n):
            s = 0.0
            for j in range(m):
                acc = 0.0
                for k in range(d):
                    diff = X[i, k] - C[j, k]
                    acc = acc + diff * diff
                s = s + coef[j] * exp(-gamma * acc)
            f[i] = s
    return out
