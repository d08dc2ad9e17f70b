import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sentitrade.classify import (
    EmptyTest,
    FeatureMismatch,
    LogRegModel,
    SingleClassTraining,
    evaluate,
    load_model,
    predict,
    predict_many,
    save_model,
    train_logreg_l1,
)
from sentitrade.classify.logreg import objective, optimality_residual


def planted_two_feature(seed=0, n=40):
    """x1 equals the label mapped to {0, 1}; x2 is uniform noise."""
    rng = np.random.default_rng(seed)
    y = rng.permutation(np.repeat([1, -1], n // 2))
    X = np.column_stack([(y + 1) / 2.0, rng.random(n)])
    return X, y


def grid_search_minimum(X, y, C, levels=30, points=21):
    """Coarse-to-fine exhaustive search of the same objective over (w1, w2, b)."""
    center = np.zeros(3)
    half = np.array([20.0, 5.0, 20.0])
    best = (np.inf, center)
    for _ in range(levels):
        axes = [np.linspace(c - h, c + h, points) for c, h in zip(center, half)]
        W1, W2, B = np.meshgrid(*axes, indexing="ij")
        W1, W2, B = W1.ravel(), W2.ravel(), B.ravel()
        margins = np.outer(X[:, 0], W1) + np.outer(X[:, 1], W2) + B
        loss = np.logaddexp(0.0, -y[:, None] * margins).mean(axis=0)
        obj = loss + (np.abs(W1) + np.abs(W2)) / C
        k = int(np.argmin(obj))
        if obj[k] < best[0]:
            best = (float(obj[k]), np.array([W1[k], W2[k], B[k]]))
        center = best[1]
        half = half / 2.0
    return best


def test_planted_noise_weight_is_exactly_zero_and_matches_grid_oracle():
    X, y = planted_two_feature()
    C = 10.0
    model = train_logreg_l1(X, y, C)
    assert model.weights[1] == 0.0
    oracle_value, oracle_point = grid_search_minimum(X, y, C)
    assert abs(oracle_point[1]) < 1e-3
    assert abs(model.diagnostics["objective"] - oracle_value) < 1e-4
    assert model.diagnostics["objective"] <= oracle_value + 1e-9


def test_planted_solution_matches_closed_form():
    # Balanced classes with an indicator feature: sigmoid(-w1/2) = 2/C at the optimum.
    X, y = planted_two_feature()
    model = train_logreg_l1(X, y, 10.0)
    ln2 = np.log(2.0)
    assert model.weights[0] == pytest.approx(4 * ln2, abs=1e-5)
    assert model.bias == pytest.approx(-2 * ln2, abs=1e-5)
    assert model.diagnostics["objective"] == pytest.approx(np.log(1.25) + 0.4 * ln2, abs=1e-10)


def test_separable_pair_is_fit():
    X = np.array([[0.0], [1.0]])
    y = np.array([-1, 1])
    model = train_logreg_l1(X, y, C=1e4)
    assert evaluate(model, X, y).accuracy == 1.0


def test_tiny_c_shrinks_everything():
    X, y = planted_two_feature(1)
    model = train_logreg_l1(X, y, C=1e-6)
    assert np.all(model.weights == 0.0)


def test_single_class_rejected():
    with pytest.raises(SingleClassTraining):
        train_logreg_l1(np.ones((3, 2)), np.ones(3), 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([0.1, 1.0, 10.0, 100.0]))
def test_objective_and_optimality(seed, C):
    rng = np.random.default_rng(seed)
    X = rng.random((50, 4))
    z = X @ rng.normal(size=4) + rng.normal(0, 0.5, 50)
    y = np.where(z > np.median(z), 1, -1)
    model = train_logreg_l1(X, y, C)
    zero = objective(np.zeros(4), 0.0, X, y, C)
    assert model.diagnostics["objective"] <= zero + 1e-12
    assert optimality_residual(model.weights, model.bias, X, y, C) < 1e-5
    assert np.all(np.isfinite(model.weights))


@pytest.mark.parametrize("seed", range(10))
def test_l1_path_sparsity_monotone(seed):
    rng = np.random.default_rng(seed)
    X = rng.random((80, 8))
    z = X @ np.array([3.0, -2.0, 1.5, 1.0, 0.5, 0.0, 0.0, 0.0]) - 2.0
    y = np.where(rng.random(80) < 1 / (1 + np.exp(-z)), 1, -1)
    nonzero = [train_logreg_l1(X, y, C).diagnostics["nonzero"] for C in np.logspace(3, -2, 10)]
    assert all(a >= b for a, b in zip(nonzero, nonzero[1:]))
    assert nonzero[0] > nonzero[-1]


def test_predict_examples():
    zero = LogRegModel(np.zeros(2), 0.0, 1.0, ["a", "b"])
    assert predict(zero, [0.3, 0.9]) == (1, 0.0)
    m = LogRegModel(np.array([1.0, 0.0]), 0.0, 1.0, ["a", "b"])
    label, score = predict(m, np.array([0.8, 0.3]))
    assert label == 1 and score == pytest.approx(0.8)
    assert predict(m, {"a": 0.8, "b": 0.3})[0] == 1
    with pytest.raises(FeatureMismatch):
        predict(m, {"a": 0.8, "c": 0.3})
    with pytest.raises(FeatureMismatch):
        predict(m, [0.1, 0.2, 0.3])


def test_evaluate_examples():
    m = LogRegModel(np.zeros(1), 0.0, 1.0)
    X = np.zeros((4, 1))
    assert evaluate(m, X, np.ones(4)).accuracy == 1.0
    ev = evaluate(m, X, np.array([1, -1, 1, -1]))
    assert ev.accuracy == 0.5
    assert ev.true_pos + ev.false_pos + ev.true_neg + ev.false_neg == 4
    with pytest.raises(EmptyTest):
        evaluate(m, np.zeros((0, 1)), np.zeros(0))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_evaluate_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    m = LogRegModel(rng.normal(size=3), float(rng.normal()), 1.0)
    X = rng.random((25, 3))
    y = rng.choice([-1, 1], 25)
    p = rng.permutation(25)
    assert evaluate(m, X, y) == evaluate(m, X[p], y[p])


def test_model_json_round_trip(tmp_path):
    X, y = planted_two_feature(2)
    m = train_logreg_l1(X, y, 10.0, feature_names=["signal", "noise"])
    save_model(m, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    assert np.array_equal(predict_many(back, X), predict_many(m, X))
    assert back.feature_names == ["signal", "noise"] and back.c_param == 10.0
