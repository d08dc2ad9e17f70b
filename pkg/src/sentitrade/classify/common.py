from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

import numpy as np


class SingleClassTraining(ValueError):
    pass


class FeatureMismatch(ValueError):
    pass


class EmptyTest(ValueError):
    pass


class Classifier(Protocol):
    feature_names: list[str] | None

    def decision_function(self, X: np.ndarray) -> np.ndarray: ...


def check_training_data(X: np.ndarray, y: np.ndarray) -> None:
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError(f"X must be (n, d) with n == len(y); got {X.shape} and {len(y)}")
    if len(y) < 2:
        raise ValueError("need at least two training rows")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be +1 / -1")
    if len(np.unique(y)) < 2:
        raise SingleClassTraining("training data contains a single class")


def signs(scores: np.ndarray) -> np.ndarray:
    """+1 / -1 with score 0 resolved to +1."""
    return np.where(np.asarray(scores) < 0, -1, 1)


def _as_vector(model: Classifier, row: Mapping[str, float] | Sequence[float] | np.ndarray) -> np.ndarray:
    names = model.feature_names
    if isinstance(row, Mapping):
        if names is None:
            raise FeatureMismatch("model has no feature names; pass a plain vector")
        if list(row.keys()) != list(names):
            raise FeatureMismatch(f"row features {list(row.keys())} != model features {names}")
        return np.array([row[n] for n in names], dtype=float)
    x = np.asarray(row, dtype=float).ravel()
    expected = len(names) if names is not None else None
    if expected is not None and len(x) != expected:
        raise FeatureMismatch(f"row has {len(x)} values, model expects {expected}")
    return x


def predict(model: Classifier, row) -> tuple[int, float]:
    """(label, decision score) for one row given as a name->value map or a vector."""
    x = _as_vector(model, row)
    try:
        score = float(model.decision_function(x[None, :])[0])
    except ValueError as exc:
        raise FeatureMismatch(str(exc)) from exc
    return (-1 if score < 0 else 1), score


def predict_many(model: Classifier, X: np.ndarray) -> np.ndarray:
    return signs(model.decision_function(np.asarray(X, dtype=float)))


@dataclass(frozen=True)
class Evaluation:
    accuracy: float
    true_pos: int
    false_pos: int
    true_neg: int
    false_neg: int

    @property
    def n(self) -> int:
        return self.true_pos + self.false_pos + self.true_neg + self.false_neg


def score_predictions(pred: np.ndarray, y: np.ndarray) -> Evaluation:
    pred, y = np.asarray(pred), np.asarray(y)
    if len(y) == 0:
        raise EmptyTest("cannot evaluate on an empty test set")
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == -1)))
    tn = int(np.sum((pred == -1) & (y == -1)))
    fn = int(np.sum((pred == -1) & (y == 1)))
    return Evaluation((tp + tn) / len(y), tp, fp, tn, fn)


def evaluate(model: Classifier, X: np.ndarray, y: np.ndarray) -> Evaluation:
    """Accuracy and confusion counts of sign predictions."""
    if len(y) == 0:
        raise EmptyTest("cannot evaluate on an empty test set")
    return score_predictions(predict_many(model, X), y)
