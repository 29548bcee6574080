import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from iwnystrom import _backend, _pure
from iwnystrom.errors import InputError
from iwnystrom.kernel import KernelSpec, eval_kernel, gram, kernel_matvec

from conftest import rbf_loop


def test_eval_kernel_examples():
    assert eval_kernel(KernelSpec(1.0), [0, 0], [0, 0]) == 1.0
    assert eval_kernel(KernelSpec(0.5), [0.0], [np.sqrt(2)]) == pytest.approx(np.exp(-1), rel=1e-14)
    assert eval_kernel(KernelSpec(10.0), [1, 1], [1, 1]) == 1.0


@pytest.mark.parametrize("gamma", [0.0, -1.0, np.inf, np.nan])
def test_spec_rejects_bad_gamma(gamma):
    with pytest.raises(InputError):
        KernelSpec(gamma)


def test_dimension_mismatch():
    with pytest.raises(InputError):
        eval_kernel(KernelSpec(1.0), [0, 0], [0, 0, 0])
    with pytest.raises(InputError):
        gram(KernelSpec(1.0), np.zeros((2, 2)), np.zeros((3, 3)))


def test_gram_small_cases():
    spec = KernelSpec(0.3)
    np.testing.assert_array_equal(gram(spec, [[1.0, 2.0]], [[1.0, 2.0]]), [[1.0]])
    pts = np.array([[0.5, -1.0], [0.5, -1.0]])
    K = gram(spec, pts, pts)
    np.testing.assert_array_equal(K, np.ones((2, 2)))
    assert np.linalg.matrix_rank(K) == 1


def test_gram_matches_loop(rng):
    X = rng.normal(size=(5, 2))
    spec = KernelSpec(0.7)
    K = gram(spec, X, X)
    loop = np.array([[eval_kernel(spec, a, b) for b in X] for a in X])
    np.testing.assert_allclose(K, loop, rtol=0, atol=1e-15)


def test_gram_panels_large(rng):
    A = rng.normal(size=(2100, 3))
    B = rng.normal(size=(7, 3))
    np.testing.assert_allclose(gram(KernelSpec(0.2), A, B), rbf_loop(0.2, A, B), atol=1e-14)


def test_backends_agree(rng):
    A = rng.normal(size=(60, 4))
    B = rng.normal(size=(30, 4))
    c = rng.normal(size=30)
    np.testing.assert_allclose(_backend.rbf_gram(A, B, 0.4), _pure.rbf_gram(A, B, 0.4), atol=1e-14)
    np.testing.assert_allclose(_backend.rbf_predict(A, B, c, 0.4), _pure.rbf_predict(A, B, c, 0.4),
                               atol=1e-12)


def test_kernel_matvec(rng):
    X = rng.normal(size=(20, 2))
    C = rng.normal(size=(6, 2))
    c = rng.normal(size=6)
    np.testing.assert_allclose(kernel_matvec(KernelSpec(1.1), X, C, c), rbf_loop(1.1, X, C) @ c,
                               atol=1e-12)


points = arrays(np.float64, st.tuples(st.integers(1, 8), st.just(3)),
                elements=st.floats(-5, 5, allow_nan=False))


@settings(max_examples=50, deadline=None)
@given(points, st.floats(1e-3, 10))
def test_gram_properties(X, gamma):
    K = gram(KernelSpec(gamma), X, X)
    np.testing.assert_allclose(np.diag(K), 1.0)
    np.testing.assert_allclose(K, K.T, atol=1e-15)
    assert np.all((K >= 0) & (K <= 1))
    assert np.linalg.eigvalsh(K).min() > -1e-10


def test_fallback_selected_at_import():
    import os
    import subprocess
    import sys
    code = "import iwnystrom; print(iwnystrom.BACKEND)"
    env = dict(os.environ, IWNYSTROM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    assert _backend.NAME in ("cython", "numpy")
