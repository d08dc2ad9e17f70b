import numpy as np
import pytest

from sentitrade.classify import (
    TooFewFeatures,
    TooFewRows,
    cross_validate,
    default_grid,
    evaluate,
    rfecv,
    train_logreg_l1,
)
from sentitrade.classify.selection import best_by_tie_rule, chronological_folds


def noisy_logistic(rng, n, d=40):
    """One informative column among ``d``; the label is a noisy logistic of it."""
    X = rng.random((n, d))
    z = 6 * (X[:, 0] - 0.5)
    y = np.where(rng.random(n) < 1 / (1 + np.exp(-z)), 1, -1)
    return X, y


def test_folds_are_contiguous_and_cover():
    folds = chronological_folds(10, 3)
    assert [f.tolist() for f in folds] == [[0, 1, 2, 3], [4, 5, 6], [7, 8, 9]]


def test_singleton_grid():
    rng = np.random.default_rng(0)
    X, y = noisy_logistic(rng, 30, 3)
    report = cross_validate(X, y, [{"C": 3.0}])
    assert report.best_point == {"C": 3.0} and len(report.fold_accuracy[0]) == 3


def test_ties_go_to_smaller_c():
    rng = np.random.default_rng(1)
    X, y = noisy_logistic(rng, 30, 3)
    # Both points shrink every weight to zero, so their accuracies are identical.
    report = cross_validate(X, y, [{"C": 1e-5}, {"C": 1e-6}])
    assert report.mean_accuracy[0] == report.mean_accuracy[1]
    assert report.best_point == {"C": 1e-6}


def test_tie_rule_then_gamma():
    grid = [{"C": 1.0, "gamma": 10.0}, {"C": 1.0, "gamma": 0.1}, {"C": 10.0, "gamma": 0.01}]
    assert best_by_tie_rule(grid, [0.7, 0.7, 0.7]) == 1
    assert best_by_tie_rule(grid, [0.6, 0.7, 0.8]) == 2


def test_too_few_rows():
    X = np.zeros((5, 1))
    with pytest.raises(TooFewRows):
        cross_validate(X, np.array([1, 1, 1, -1, -1]), [{"C": 1.0}])


def test_single_class_fold_falls_back_to_constant():
    X = np.linspace(0, 1, 12)[:, None]
    y = np.array([1] * 4 + [-1, 1] * 4)
    report = cross_validate(X, y, [{"C": 1.0}])
    assert 0.0 <= report.best_accuracy <= 1.0


@pytest.mark.slow
def test_cv_recovers_planted_c():
    cs = [3.0, 10.0, 30.0, 100.0, 300.0]
    hits = 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        X, y = noisy_logistic(rng, 120)
        X_big, y_big = noisy_logistic(rng, 20_000)
        # Oracle: the grid point whose fit generalizes best on a large independent sample.
        oracle = int(np.argmax([evaluate(train_logreg_l1(X, y, c), X_big, y_big).accuracy for c in cs]))
        chosen = cross_validate(X, y, default_grid("logreg", cs)).best_index
        hits += abs(chosen - oracle) <= 1
    assert hits >= 8


def test_rfecv_keeps_the_predictive_feature():
    rng = np.random.default_rng(2)
    y = np.where(rng.random(90) < 0.5, 1, -1)
    X = np.column_stack([(y + 1) / 2 * 0.6 + 0.2 + rng.normal(0, 0.05, 90), rng.random((90, 5))])
    names = ["signal"] + [f"noise_{i}" for i in range(5)]
    result = rfecv(X, y, names, "logreg")
    assert "signal" in result.selected
    assert len(result.trace) == 6
    assert [len(s.features) for s in result.trace] == [6, 5, 4, 3, 2, 1]


def test_rfecv_keeps_both_xor_coordinates():
    rng = np.random.default_rng(3)
    P = rng.random((120, 2))
    y = np.where((P[:, 0] > 0.5) == (P[:, 1] > 0.5), 1, -1)
    X = np.column_stack([P, rng.random((120, 2))])
    grid = default_grid("svm", [1.0, 10.0], [1.0, 10.0])
    result = rfecv(X, y, ["a", "b", "n1", "n2"], "svm", grid)
    assert {"a", "b"} <= set(result.selected)


def test_rfecv_single_feature_trace():
    rng = np.random.default_rng(4)
    X, y = noisy_logistic(rng, 30, 1)
    result = rfecv(X, y, ["only"], "logreg", [{"C": 10.0}])
    assert len(result.trace) == 1 and result.selected == ["only"]
    with pytest.raises(TooFewFeatures):
        rfecv(X[:, :0], y, [], "logreg")
