import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iwnystrom.errors import InputError
from iwnystrom.estimators import (FittedModel, SampleSet, fit_krr, fit_nystrom_wkrr, fit_path,
                                  fit_wkrr, predict, solve_psd, weighted_risk)
from iwnystrom.kernel import KernelSpec, gram

from conftest import random_problem, rbf_loop


def rel_err(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


# ---------------------------------------------------------------- solve_psd

def test_solve_psd_examples():
    np.testing.assert_allclose(solve_psd(np.eye(3), [1.0, 2.0, 3.0], jitter=0), [1, 2, 3])
    np.testing.assert_allclose(solve_psd(np.diag([2.0, 4.0]), [2.0, 4.0]), [1, 1])
    z = solve_psd(np.ones((2, 2)), [2.0, 2.0], jitter=0)
    np.testing.assert_allclose(z, np.linalg.pinv(np.ones((2, 2))) @ [2, 2], atol=1e-8)
    np.testing.assert_allclose(z, [1, 1], atol=1e-8)


def test_solve_psd_rejects_bad_input():
    with pytest.raises(InputError):
        solve_psd(np.ones((2, 3)), [1, 1])
    with pytest.raises(InputError):
        solve_psd(np.array([[1.0, 2.0], [0.0, 1.0]]), [1, 1])
    with pytest.raises(InputError):
        solve_psd(np.eye(2), [1, 1], jitter=-1)


def test_solve_psd_matrix_rhs(rng):
    M = rng.normal(size=(6, 6))
    A = M @ M.T + np.eye(6)
    B = rng.normal(size=(6, 3))
    np.testing.assert_allclose(solve_psd(A, B), np.linalg.solve(A, B), rtol=1e-10)


def test_solve_psd_rank_deficient_min_norm(rng):
    M = rng.normal(size=(5, 2))
    A = M @ M.T
    b = A @ rng.normal(size=5)
    z = solve_psd(A, b, jitter=0)
    np.testing.assert_allclose(A @ z, b, atol=1e-6)


# ---------------------------------------------------------------- KRR

def test_krr_single_point():
    train = SampleSet([[0.3, -0.2]], [2.0])
    model = fit_krr(train, KernelSpec(1.0), 1.0)
    assert model.coefficients[0] == pytest.approx(1.0)
    assert predict(model, train.X)[0] == pytest.approx(1.0)


def test_krr_heavy_regularization(rng):
    train, spec = random_problem(rng, n=30)
    model = fit_krr(train, spec, 1e6)
    bound = np.linalg.norm(train.y) / (train.n * 1e6)
    assert np.linalg.norm(model.coefficients) <= bound


def test_krr_matches_dense_oracle(rng):
    train, spec = random_problem(rng, n=50)
    lam = 1e-3
    K = rbf_loop(spec.gamma, train.X, train.X)
    c = np.linalg.solve(K + 50 * lam * np.eye(50), train.y)
    Xq = rng.normal(size=(20, 2))
    model = fit_krr(train, spec, lam)
    assert rel_err(predict(model, Xq), rbf_loop(spec.gamma, Xq, train.X) @ c) <= 1e-10


@pytest.mark.parametrize("lam", [0.0, -1.0, np.nan])
def test_bad_lambda(rng, lam):
    train, spec = random_problem(rng, n=5)
    with pytest.raises(InputError):
        fit_krr(train, spec, lam)
    with pytest.raises(InputError):
        fit_wkrr(train, np.ones(5), spec, lam)


# ---------------------------------------------------------------- W-KRR

def test_wkrr_unit_weights_equal_krr(rng):
    train, spec = random_problem(rng, n=60)
    a = fit_wkrr(train, np.ones(60), spec, 1e-3).coefficients
    b = fit_krr(train, spec, 1e-3).coefficients
    np.testing.assert_array_equal(a, b)


def test_wkrr_matches_inverse_weight_form(rng):
    train, spec = random_problem(rng, n=30)
    w = rng.uniform(0.2, 3.0, size=30)
    lam = 1e-2
    K = rbf_loop(spec.gamma, train.X, train.X)
    oracle = np.linalg.solve(K + 30 * lam * np.diag(1 / w), train.y)
    c = fit_wkrr(train, w, spec, lam).coefficients
    assert rel_err(c, oracle) <= 1e-10


def test_wkrr_zero_weight_drops_point(rng):
    n, j, lam = 25, 7, 1e-2
    train, spec = random_problem(rng, n=n)
    w = rng.uniform(0.5, 2.0, size=n)
    w[j] = 0.0
    full = fit_wkrr(train, w, spec, lam)
    keep = np.delete(np.arange(n), j)
    reduced = fit_wkrr(train.subset(keep), w[keep], spec, lam * n / (n - 1))
    assert full.coefficients[j] == 0.0
    Xq = rng.normal(size=(15, 2))
    assert rel_err(predict(full, Xq), predict(reduced, Xq)) <= 1e-10


def test_wkrr_weight_errors(rng):
    train, spec = random_problem(rng, n=5)
    with pytest.raises(InputError):
        fit_wkrr(train, [1, 1, -1, 1, 1], spec, 1.0)
    with pytest.raises(InputError):
        fit_wkrr(train, np.zeros(5), spec, 1.0)
    with pytest.raises(InputError):
        fit_wkrr(train, np.ones(4), spec, 1.0)


def test_missing_targets():
    with pytest.raises(InputError):
        fit_krr(SampleSet(np.zeros((3, 2))), KernelSpec(1.0), 1.0)


# ---------------------------------------------------------------- Nystrom

def test_nystrom_full_basis_unit_weights(rng):
    train, spec = random_problem(rng, n=80)
    Xq = rng.normal(size=(50, 2))
    nys = fit_nystrom_wkrr(train, np.ones(80), np.arange(80), spec, 1e-3)
    assert rel_err(predict(nys, Xq), predict(fit_krr(train, spec, 1e-3), Xq)) <= 1e-8


def test_nystrom_full_basis_weighted(rng):
    train, spec = random_problem(rng, n=120)
    w = rng.lognormal(size=120)
    Xq = rng.normal(size=(50, 2))
    nys = fit_nystrom_wkrr(train, w, np.arange(120), spec, 1e-3)
    assert rel_err(predict(nys, Xq), predict(fit_wkrr(train, w, spec, 1e-3), Xq)) <= 1e-8


def test_nystrom_duplicated_basis_indices(rng):
    train, spec = random_problem(rng, n=40)
    w = rng.uniform(0.5, 2, size=40)
    a = fit_nystrom_wkrr(train, w, [3, 3, 9, 9, 20], spec, 1e-2)
    b = fit_nystrom_wkrr(train, w, [3, 9, 20], spec, 1e-2)
    np.testing.assert_array_equal(a.coefficients, b.coefficients)
    assert a.centers.shape == (3, 2)


def test_nystrom_single_center_closed_form(rng):
    train, spec = random_problem(rng, n=30)
    w = rng.uniform(0.1, 2.0, size=30)
    lam, j = 1e-2, 4
    k = gram(spec, train.X, train.X[[j]])[:, 0]
    c1 = np.sum(w * k * train.y) / (np.sum(w * k * k) + 30 * lam)
    for solver in ("eig", "direct"):
        model = fit_nystrom_wkrr(train, w, [j], spec, lam, solver=solver)
        assert model.coefficients[0] == pytest.approx(c1, rel=1e-12)


def test_nystrom_direct_solver_agrees(rng):
    train, spec = random_problem(rng, n=100)
    w = rng.uniform(0.5, 2.0, size=100)
    idx = np.arange(0, 100, 4)
    a = fit_nystrom_wkrr(train, w, idx, spec, 1e-2, solver="eig")
    b = fit_nystrom_wkrr(train, w, idx, spec, 1e-2, solver="direct")
    Xq = rng.normal(size=(20, 2))
    assert rel_err(predict(a, Xq), predict(b, Xq)) <= 1e-6


def test_nystrom_errors(rng):
    train, spec = random_problem(rng, n=10)
    with pytest.raises(InputError):
        fit_nystrom_wkrr(train, np.ones(10), [], spec, 1.0)
    with pytest.raises(InputError):
        fit_nystrom_wkrr(train, np.ones(10), [10], spec, 1.0)
    with pytest.raises(InputError):
        fit_nystrom_wkrr(train, np.ones(10), [1], spec, 1.0, solver="cg")


# ---------------------------------------------------------------- predict / model

def test_predict_examples(rng):
    C = rng.normal(size=(4, 2))
    zero = FittedModel(C, np.zeros(4), KernelSpec(1.0), 1.0, "KRR")
    np.testing.assert_array_equal(predict(zero, rng.normal(size=(6, 2))), 0.0)
    one = FittedModel(C[:1], np.ones(1), KernelSpec(1.0), 1.0, "KRR")
    assert predict(one, C[:1])[0] == 1.0


def test_predict_matches_loop(rng):
    C = rng.normal(size=(12, 3))
    c = rng.normal(size=12)
    Xq = rng.normal(size=(20, 3))
    model = FittedModel(C, c, KernelSpec(0.8), 1.0, "W-KRR")
    loop = np.array([sum(c[i] * np.exp(-0.8 * np.sum((x - C[i]) ** 2)) for i in range(12)) for x in Xq])
    np.testing.assert_allclose(predict(model, Xq), loop, rtol=0, atol=1e-12)
    with pytest.raises(InputError):
        predict(model, rng.normal(size=(3, 2)))


def test_model_json_round_trip(rng, tmp_path):
    train, spec = random_problem(rng, n=30)
    model = fit_wkrr(train, rng.uniform(0.5, 2, 30), spec, 1e-3)
    path = tmp_path / "model.json"
    model.save(path)
    again = FittedModel.load(path)
    Xq = rng.normal(size=(10, 2))
    np.testing.assert_allclose(predict(again, Xq), predict(model, Xq), rtol=0, atol=1e-12)
    assert again.kind == "W-KRR" and again.lam == model.lam


def test_model_validation():
    with pytest.raises(InputError):
        FittedModel(np.zeros((2, 2)), np.zeros(3), KernelSpec(1.0), 1.0, "KRR")
    with pytest.raises(InputError):
        FittedModel(np.zeros((2, 2)), np.zeros(2), KernelSpec(1.0), 1.0, "GP")
    with pytest.raises(InputError):
        FittedModel.from_dict({"kind": "KRR"})


# ---------------------------------------------------------------- path and properties

def test_fit_path_matches_single_fits(rng):
    train, spec = random_problem(rng, n=40)
    w = rng.uniform(0.5, 2, 40)
    lams = [1e-3, 1e-2, 1e-1]
    for basis in (None, np.arange(0, 40, 3)):
        models = fit_path(train, w, spec, lams, basis=basis)
        for lam, m in zip(lams, models):
            ref = (fit_wkrr(train, w, spec, lam) if basis is None
                   else fit_nystrom_wkrr(train, w, basis, spec, lam))
            np.testing.assert_allclose(m.coefficients, ref.coefficients, rtol=1e-12, atol=1e-14)


def test_weighted_risk_monotone_in_lambda(rng):
    train, spec = random_problem(rng, n=60)
    w = rng.lognormal(size=60)
    lams = 1e-4 * (1e4 ** (np.arange(10) / 9))
    for basis in (None, np.arange(0, 60, 2)):
        risks = [weighted_risk(m, train, w) for m in fit_path(train, w, spec, lams, basis=basis)]
        assert np.all(np.diff(risks) >= -1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.1, 100), st.integers(5, 30))
def test_scale_equivariance(seed, a, n):
    rng = np.random.default_rng(seed)
    train, spec = random_problem(rng, n=n)
    w = rng.uniform(0.1, 3, n)
    scaled = SampleSet(train.X, a * train.y)
    Xq = rng.normal(size=(5, 2))
    for fit in (lambda s: fit_wkrr(s, w, spec, 1e-2),
                lambda s: fit_nystrom_wkrr(s, w, np.arange(0, n, 2), spec, 1e-2)):
        np.testing.assert_allclose(predict(fit(scaled), Xq), a * predict(fit(train), Xq),
                                   rtol=1e-9, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 40))
def test_unit_weight_reduction_property(seed, n):
    rng = np.random.default_rng(seed)
    train, spec = random_problem(rng, n=n)
    lam = float(rng.uniform(1e-4, 1))
    np.testing.assert_array_equal(fit_wkrr(train, np.ones(n), spec, lam).coefficients,
                                  fit_krr(train, spec, lam).coefficients)
