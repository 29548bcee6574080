"""NumPy implementations mirroring the compiled kernels in ``_core``."""
import numpy as np


def rbf_gram(X, Z, gamma):
    sq = np.zeros((X.shape[0], Z.shape[0]))
    for k in range(X.shape[1]):
        diff = X[:, k, None] - Z[None, :, k]
        sq += diff * diff
    return np.exp(-gamma * sq)


def rbf_predict(X, C, coef, gamma):
    return rbf_gram(X, C, gamma) @ coef
