"""From-scratch classifiers: L1 logistic regression and an SMO-trained RBF SVM."""

import json
from pathlib import Path

from .common import (
    EmptyTest,
    Evaluation,
    FeatureMismatch,
    SingleClassTraining,
    evaluate,
    predict,
    predict_many,
)
from .logreg import LogRegConfig, LogRegModel, train_logreg_l1
from .selection import (
    DEFAULT_C_GRID,
    DEFAULT_GAMMA_GRID,
    CvReport,
    ModelKind,
    RfecvResult,
    TooFewFeatures,
    TooFewRows,
    cross_validate,
    default_grid,
    fit_model,
    rfecv,
)
from .svm import NoConvergence, SvmModel, rbf_kernel, train_svm_rbf


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2, sort_keys=True) + "\n")


def load_model(path):
    d = json.loads(Path(path).read_text())
    if d["kind"] == "logreg":
        return LogRegModel.from_dict(d)
    if d["kind"] == "svm":
        return SvmModel.from_dict(d)
    raise ValueError(f"{path}: unknown model kind {d['kind']!r}")


__all__ = [
    "DEFAULT_C_GRID",
    "DEFAULT_GAMMA_GRID",
    "CvReport",
    "EmptyTest",
    "Evaluation",
    "FeatureMismatch",
    "LogRegConfig",
    "LogRegModel",
    "ModelKind",
    "NoConvergence",
    "RfecvResult",
    "SingleClassTraining",
    "SvmModel",
    "TooFewFeatures",
    "TooFewRows",
    "cross_validate",
    "default_grid",
    "evaluate",
    "fit_model",
    "load_model",
    "predict",
    "predict_many",
    "rbf_kernel",
    "rfecv",
    "save_model",
    "train_logreg_l1",
    "train_svm_rbf",
]
