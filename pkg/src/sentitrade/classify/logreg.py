"""L1-regularized logistic regression fitted by proximal gradient descent."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .common import SingleClassTraining, check_training_data


@dataclass(frozen=True)
class LogRegConfig:
    tol: float = 1e-8
    residual_tol: float = 1e-7
    max_iter: int = 10_000
    step0: float = 1.0
    shrink: float = 0.5
    grow: float = 1.25


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    c_param: float
    feature_names: list[str] | None = None
    diagnostics: dict = field(default_factory=dict)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.bias

    def to_dict(self) -> dict:
        return {
            "kind": "logreg",
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "c_param": self.c_param,
            "feature_names": self.feature_names,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogRegModel":
        return cls(
            np.array(d["weights"], dtype=float),
            float(d["bias"]),
            float(d["c_param"]),
            d.get("feature_names"),
            d.get("diagnostics", {}),
        )


def soft_threshold(x: np.ndarray, t: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def logistic_loss(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray) -> float:
    """Mean log(1 + exp(-y (Xw + b)))."""
    return float(np.mean(np.logaddexp(0.0, -y * (X @ w + b))))


def objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, C: float) -> float:
    return logistic_loss(w, b, X, y) + np.abs(w).sum() / C


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_gradient(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Gradient of the mean logistic loss in (w, b)."""
    r = -y * _sigmoid(-y * (X @ w + b)) / len(y)
    return X.T @ r, float(r.sum())


def _residual(g: np.ndarray, gb: float, w: np.ndarray, lam: float) -> float:
    nz = w != 0
    res = np.where(nz, np.abs(g + lam * np.sign(w)), np.maximum(np.abs(g) - lam, 0.0))
    return float(max(res.max(initial=0.0), abs(gb)))


def optimality_residual(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, C: float) -> float:
    """Max violation of the subgradient condition 0 in grad + (1/C) d|w|."""
    g, gb = loss_gradient(w, b, X, y)
    return _residual(g, gb, w, 1.0 / C)


def train_logreg_l1(
    X: np.ndarray,
    y: np.ndarray,
    C: float,
    config: LogRegConfig = LogRegConfig(),
    feature_names: list[str] | None = None,
) -> LogRegModel:
    """Minimize mean logistic loss + ||w||_1 / C; the bias is not penalized.

    ISTA with backtracking: each step takes a gradient step on the smooth
    loss, soft-thresholds the weights, and halves the step until the
    quadratic upper bound holds. Stops when the objective drops by less than
    ``config.tol`` while the subgradient optimality residual is below
    ``config.residual_tol``, or after ``config.max_iter`` iterations.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    check_training_data(X, y)
    if not C > 0:
        raise ValueError(f"C must be > 0, got {C}")
    lam = 1.0 / C
    w = np.zeros(X.shape[1])
    # Start from the best bias-only model.
    p = np.clip(np.mean(y > 0), 1e-12, 1 - 1e-12)
    b = float(np.log(p / (1 - p)))
    f = logistic_loss(w, b, X, y)
    F = f + lam * np.abs(w).sum()
    step = config.step0
    converged = False
    decrease = np.inf
    it = 0
    for it in range(1, config.max_iter + 1):
        g, gb = loss_gradient(w, b, X, y)
        if decrease < config.tol and _residual(g, gb, w, lam) < config.residual_tol:
            converged = True
            break
        while True:
            w_new = soft_threshold(w - step * g, step * lam)
            b_new = b - step * gb
            dw, db = w_new - w, b_new - b
            f_new = logistic_loss(w_new, b_new, X, y)
            bound = f + g @ dw + gb * db + (dw @ dw + db * db) / (2 * step)
            if f_new <= bound + 1e-15 or step < 1e-12:
                break
            step *= config.shrink
        F_new = f_new + lam * np.abs(w_new).sum()
        decrease = F - F_new
        if decrease < 0:
            # Rounding noise at the optimum; keep the better iterate.
            converged = True
            break
        w, b, f, F = w_new, b_new, f_new, F_new
        step *= config.grow
    diagnostics = {
        "iterations": it,
        "converged": converged,
        "objective": F,
        "residual": optimality_residual(w, b, X, y, C),
        "nonzero": int(np.count_nonzero(w)),
    }
    return LogRegModel(w, b, float(C), feature_names, diagnostics)


__all__ = [
    "LogRegConfig",
    "LogRegModel",
    "SingleClassTraining",
    "logistic_loss",
    "objective",
    "optimality_residual",
    "soft_threshold",
    "train_logreg_l1",
]
