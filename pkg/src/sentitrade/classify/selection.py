"""Chronological k-fold cross-validation and recursive feature elimination."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .common import Classifier, predict_many
from .logreg import LogRegConfig, LogRegModel, train_logreg_l1
from .svm import SvmModel, train_svm_rbf

DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
DEFAULT_GAMMA_GRID = (0.01, 0.1, 1.0, 10.0)


class TooFewRows(ValueError):
    pass


class TooFewFeatures(ValueError):
    pass


class ModelKind(str, enum.Enum):
    LOGREG = "logreg"
    SVM = "svm"


def default_grid(kind: ModelKind | str, cs: Sequence[float] = DEFAULT_C_GRID, gammas: Sequence[float] = DEFAULT_GAMMA_GRID) -> list[dict]:
    if ModelKind(kind) is ModelKind.LOGREG:
        return [{"C": float(c)} for c in cs]
    return [{"C": float(c), "gamma": float(g)} for c, g in itertools.product(cs, gammas)]


@dataclass
class ConstantModel:
    """Predicts one class; stands in when a training fold holds a single class."""

    label: int
    feature_names: list[str] | None = None

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return np.full(len(np.atleast_2d(X)), float(self.label))


def fit_model(
    kind: ModelKind | str,
    X: np.ndarray,
    y: np.ndarray,
    point: dict,
    feature_names: list[str] | None = None,
    logreg_config: LogRegConfig = LogRegConfig(),
) -> LogRegModel | SvmModel:
    if ModelKind(kind) is ModelKind.LOGREG:
        return train_logreg_l1(X, y, point["C"], logreg_config, feature_names)
    return train_svm_rbf(X, y, point["C"], point["gamma"], feature_names)


def chronological_folds(n: int, k: int) -> list[np.ndarray]:
    """Contiguous index blocks in time order (no shuffling)."""
    return np.array_split(np.arange(n), k)


@dataclass
class CvReport:
    grid: list[dict]
    mean_accuracy: list[float]
    fold_accuracy: list[list[float]]
    best_index: int

    @property
    def best_point(self) -> dict:
        return self.grid[self.best_index]

    @property
    def best_accuracy(self) -> float:
        return self.mean_accuracy[self.best_index]

    def rows(self) -> list[dict]:
        out = []
        for i, (point, acc, folds) in enumerate(zip(self.grid, self.mean_accuracy, self.fold_accuracy)):
            out.append({
                "C": point["C"],
                "gamma": point.get("gamma", ""),
                "mean_accuracy": acc,
                **{f"fold_{k}": a for k, a in enumerate(folds)},
                "best": int(i == self.best_index),
            })
        return out


def best_by_tie_rule(grid: Sequence[dict], scores: Sequence[float], atol: float = 1e-12) -> int:
    """Index of the top score; ties go to smaller C, then smaller gamma."""
    top = max(scores)
    tied = [i for i, s in enumerate(scores) if s >= top - atol]
    return min(tied, key=lambda i: (grid[i]["C"], grid[i].get("gamma", 0.0), i))


def cross_validate(
    X: np.ndarray,
    y: np.ndarray,
    grid: Sequence[dict],
    kind: ModelKind | str = ModelKind.LOGREG,
    k: int = 3,
    logreg_config: LogRegConfig = LogRegConfig(),
) -> CvReport:
    """Score each grid point by mean held-out accuracy over ``k`` contiguous folds."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if not grid:
        raise ValueError("empty hyperparameter grid")
    if min(np.sum(y == 1), np.sum(y == -1)) < k:
        raise TooFewRows(f"need at least {k} rows of each class for {k}-fold CV")
    folds = chronological_folds(len(y), k)
    fold_acc: list[list[float]] = [[] for _ in grid]
    for held in folds:
        mask = np.ones(len(y), dtype=bool)
        mask[held] = False
        Xtr, ytr = X[mask], y[mask]
        for g, point in enumerate(grid):
            model: Classifier
            if len(np.unique(ytr)) < 2:
                model = ConstantModel(int(ytr[0]))
            else:
                model = fit_model(kind, Xtr, ytr, point, logreg_config=logreg_config)
            fold_acc[g].append(float(np.mean(predict_many(model, X[held]) == y[held])))
    means = [float(np.mean(a)) for a in fold_acc]
    return CvReport(list(grid), means, fold_acc, best_by_tie_rule(grid, means))


def permutation_importance(
    model: Classifier, X: np.ndarray, y: np.ndarray, rng: np.random.Generator, repeats: int = 3
) -> np.ndarray:
    """Mean accuracy lost when each column is shuffled."""
    base = np.mean(predict_many(model, X) == y)
    out = np.zeros(X.shape[1])
    for j in range(X.shape[1]):
        drops = []
        for _ in range(repeats):
            Xp = X.copy()
            Xp[:, j] = rng.permutation(Xp[:, j])
            drops.append(base - np.mean(predict_many(model, Xp) == y))
        out[j] = np.mean(drops)
    return out


@dataclass
class RfecvStep:
    features: list[str]
    cv_accuracy: float
    best_point: dict


@dataclass
class RfecvResult:
    selected: list[str]
    trace: list[RfecvStep]


def rfecv(
    X: np.ndarray,
    y: np.ndarray,
    feature_names: Sequence[str],
    kind: ModelKind | str = ModelKind.LOGREG,
    grid: Sequence[dict] | None = None,
    k: int = 3,
    seed: int = 0,
) -> RfecvResult:
    """Greedy backward elimination scored by cross-validation.

    Each round cross-validates the current subset, refits at the best grid
    point, and drops the weakest feature: smallest |weight| for logistic
    regression, smallest permutation importance for the SVM. Returns the
    subset with the best CV accuracy along the path; ties keep the smaller
    subset.
    """
    kind = ModelKind(kind)
    names = list(feature_names)
    if len(names) < 1:
        raise TooFewFeatures("rfecv needs at least one feature")
    X = np.asarray(X, dtype=float)
    grid = list(grid) if grid is not None else default_grid(kind)
    rng = np.random.default_rng(seed)
    current = list(range(len(names)))
    trace = []
    while True:
        report = cross_validate(X[:, current], y, grid, kind, k)
        trace.append(RfecvStep([names[i] for i in current], report.best_accuracy, report.best_point))
        if len(current) == 1:
            break
        model = fit_model(kind, X[:, current], y, report.best_point)
        if kind is ModelKind.LOGREG:
            importance = np.abs(model.weights)
        else:
            importance = permutation_importance(model, X[:, current], y, rng)
        del current[int(np.argmin(importance))]
    top = max(s.cv_accuracy for s in trace)
    best = [s for s in trace if s.cv_accuracy >= top - 1e-12][-1]
    return RfecvResult(list(best.features), trace)
