import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sentitrade.classify import NoConvergence, SingleClassTraining, predict, predict_many, rbf_kernel, train_svm_rbf
from sentitrade.classify.svm import dual_objective, smo_solve

XOR_X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
XOR_Y = np.array([1, 1, -1, -1])


def brute_force_decision(model, x):
    total = model.bias
    for sv, a, lab in zip(model.support_vectors, model.alphas, model.sv_labels):
        total += a * lab * math.exp(-model.gamma * sum((p - q) ** 2 for p, q in zip(sv, x)))
    return total


def test_xor_fixture():
    start = time.perf_counter()
    model = train_svm_rbf(XOR_X, XOR_Y, C=10.0, gamma=1.0, track_dual=True)
    assert time.perf_counter() - start < 1.0
    assert np.array_equal(predict_many(model, XOR_X), XOR_Y)
    for x, lab in zip(XOR_X, XOR_Y):
        assert np.sign(brute_force_decision(model, x)) == lab
    assert predict(model, [1.0, 1.0])[0] == 1
    assert abs(model.diagnostics["sum_alpha_y"]) <= 1e-6
    assert np.all((model.alphas >= 0) & (model.alphas <= 10.0))
    hist = model.diagnostics["dual_history"]
    assert all(b >= a for a, b in zip(hist, hist[1:]))
    assert model.diagnostics["max_violation"] < 1e-3


def test_identical_rows_predict_majority():
    X = np.full((5, 2), 0.3)
    y = np.array([1, 1, 1, -1, -1])
    model = train_svm_rbf(X, y, C=1.0, gamma=1.0)
    assert np.all(predict_many(model, np.vstack([X, [[0.9, 0.1]]])) == 1)


def test_duplicated_patterns_with_large_gamma():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
    y = np.array([1, 1, -1, -1])
    model = train_svm_rbf(X, y, C=1.0, gamma=100.0)
    assert np.array_equal(predict_many(model, X), y)


def test_single_class_rejected():
    with pytest.raises(SingleClassTraining):
        train_svm_rbf(np.zeros((3, 1)), np.array([1, 1, 1]), 1.0, 1.0)


def test_iteration_cap():
    rng = np.random.default_rng(0)
    X = rng.random((40, 2))
    y = np.where(rng.random(40) < 0.5, 1.0, -1.0)
    with pytest.raises(NoConvergence):
        smo_solve(rbf_kernel(X, X, 1.0), y, 10.0, max_updates=3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([0.1, 1.0, 10.0]), st.sampled_from([0.1, 1.0, 10.0]))
def test_smo_invariants_on_random_data(seed, C, gamma):
    rng = np.random.default_rng(seed)
    X = rng.random((30, 3))
    y = np.where(X[:, 0] + 0.3 * rng.normal(size=30) > 0.5, 1.0, -1.0)
    if len(np.unique(y)) < 2:
        y[0] = -y[0]
    K = rbf_kernel(X, X, gamma)
    res = smo_solve(K, y, C, track_dual=True)
    assert abs(res.alphas @ y) <= 1e-6
    assert np.all((res.alphas >= 0) & (res.alphas <= C))
    assert all(b >= a - 1e-12 for a, b in zip(res.dual_history, res.dual_history[1:]))
    assert res.dual_history[-1] == pytest.approx(dual_objective(res.alphas, y, K))
    # KKT: the maximal violating pair gap is below tolerance at termination.
    g = K @ (res.alphas * y) * y - 1.0
    v = -y * g
    up = ((res.alphas < C) & (y > 0)) | ((res.alphas > 0) & (y < 0))
    low = ((res.alphas < C) & (y < 0)) | ((res.alphas > 0) & (y > 0))
    assert v[up].max() - v[low].min() < 1e-3 + 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.floats(1e-3, 50.0))
def test_kernel_symmetric_unit_diagonal(seed, gamma):
    X = np.random.default_rng(seed).random((12, 4))
    K = rbf_kernel(X, X, gamma)
    assert np.array_equal(K, K.T)
    assert np.all(np.diag(K) == 1.0)
    assert np.all((K > 0) & (K <= 1.0))
