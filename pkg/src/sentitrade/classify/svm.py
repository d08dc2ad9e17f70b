"""Soft-margin RBF-kernel SVM trained with sequential minimal optimization.

The dual problem

    max  sum(a) - 1/2 sum_ij a_i a_j y_i y_j k(x_i, x_j)
    s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0

is solved two coordinates at a time, always picking the maximal violating
pair (Keerthi et al. working-set selection). Each pair update is an exact
line maximization, so the dual objective never decreases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .common import SingleClassTraining, check_training_data

KKT_TOL = 1e-3
MAX_PAIR_UPDATES = 100_000
_TAU = 1e-12


class NoConvergence(RuntimeError):
    pass


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a - b||^2) for every row pair; exact 1 on identical rows."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-gamma * d2)


@dataclass
class SvmModel:
    support_vectors: np.ndarray
    sv_labels: np.ndarray
    alphas: np.ndarray
    bias: float
    gamma: float
    c_param: float
    feature_names: list[str] | None = None
    diagnostics: dict = field(default_factory=dict)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        if len(self.alphas) == 0:
            return np.full(len(np.atleast_2d(X)), self.bias)
        K = rbf_kernel(X, self.support_vectors, self.gamma)
        return K @ (self.alphas * self.sv_labels) + self.bias

    def to_dict(self) -> dict:
        return {
            "kind": "svm",
            "support_vectors": self.support_vectors.tolist(),
            "sv_labels": self.sv_labels.tolist(),
            "alphas": self.alphas.tolist(),
            "bias": self.bias,
            "gamma": self.gamma,
            "c_param": self.c_param,
            "feature_names": self.feature_names,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        n_feat = len(d["feature_names"]) if d.get("feature_names") else 0
        sv = np.array(d["support_vectors"], dtype=float)
        if sv.size == 0:
            sv = sv.reshape(0, n_feat)
        return cls(
            sv,
            np.array(d["sv_labels"], dtype=float),
            np.array(d["alphas"], dtype=float),
            float(d["bias"]),
            float(d["gamma"]),
            float(d["c_param"]),
            d.get("feature_names"),
            d.get("diagnostics", {}),
        )


@dataclass
class SmoResult:
    alphas: np.ndarray
    bias: float
    gradient: np.ndarray
    dual_history: list[float]
    pair_updates: int
    max_violation: float


def dual_objective(alphas: np.ndarray, y: np.ndarray, K: np.ndarray) -> float:
    ay = alphas * y
    return float(alphas.sum() - 0.5 * ay @ K @ ay)


def smo_solve(
    K: np.ndarray,
    y: np.ndarray,
    C: float,
    tol: float = KKT_TOL,
    max_updates: int = MAX_PAIR_UPDATES,
    track_dual: bool = False,
) -> SmoResult:
    """Solve the SVM dual for a precomputed kernel matrix."""
    n = len(y)
    y = np.asarray(y, dtype=float)
    alpha = np.zeros(n)
    # Gradient of the minimization form 1/2 a'Qa - sum(a), Q = yy' * K.
    grad = -np.ones(n)
    history = [0.0] if track_dual else []
    pos = y > 0
    updates = 0
    while True:
        v = -y * grad
        below = alpha < C
        above = alpha > 0
        up = (below & pos) | (above & ~pos)
        low = (below & ~pos) | (above & pos)
        v_up = np.where(up, v, -np.inf)
        v_low = np.where(low, v, np.inf)
        i = int(np.argmax(v_up))
        j = int(np.argmin(v_low))
        violation = float(v_up[i] - v_low[j])
        if violation < tol:
            break
        if updates >= max_updates:
            raise NoConvergence(f"SMO did not reach KKT tolerance {tol} in {max_updates} pair updates")
        curv = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if curv <= 0:
            curv = _TAU
        room_i = C - alpha[i] if y[i] > 0 else alpha[i]
        room_j = alpha[j] if y[j] > 0 else C - alpha[j]
        t = min(violation / curv, room_i, room_j)
        old_i, old_j = alpha[i], alpha[j]
        if t == room_i:
            alpha[i] = C if y[i] > 0 else 0.0
        else:
            alpha[i] = min(max(old_i + y[i] * t, 0.0), C)
        if t == room_j:
            alpha[j] = 0.0 if y[j] > 0 else C
        else:
            alpha[j] = min(max(old_j - y[j] * t, 0.0), C)
        di, dj = alpha[i] - old_i, alpha[j] - old_j
        grad += y * (K[:, i] * (y[i] * di) + K[:, j] * (y[j] * dj))
        updates += 1
        if track_dual:
            history.append(dual_objective(alpha, y, K))
    v = -y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        bias = float(v[free].mean())
    else:
        below, above = alpha < C, alpha > 0
        up = (below & pos) | (above & ~pos)
        low = (below & ~pos) | (above & pos)
        lo = v[up].max() if up.any() else v[low].min()
        hi = v[low].min() if low.any() else lo
        bias = float((lo + hi) / 2.0)
    return SmoResult(alpha, bias, grad, history, updates, max(violation, 0.0))


def train_svm_rbf(
    X: np.ndarray,
    y: np.ndarray,
    C: float,
    gamma: float,
    feature_names: list[str] | None = None,
    tol: float = KKT_TOL,
    track_dual: bool = False,
) -> SvmModel:
    """Fit an RBF SVM; only rows with a positive dual coefficient are kept."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    check_training_data(X, y)
    if not (C > 0 and gamma > 0):
        raise ValueError(f"C and gamma must be > 0, got C={C}, gamma={gamma}")
    K = rbf_kernel(X, X, gamma)
    res = smo_solve(K, y, C, tol=tol, track_dual=track_dual)
    sv = res.alphas > 0
    diagnostics = {
        "pair_updates": res.pair_updates,
        "max_violation": res.max_violation,
        "n_support": int(sv.sum()),
        "dual_objective": dual_objective(res.alphas, y, K),
        "sum_alpha_y": float(res.alphas @ y),
    }
    if track_dual:
        diagnostics["dual_history"] = res.dual_history
    return SvmModel(X[sv], y[sv], res.alphas[sv], res.bias, float(gamma), float(C), feature_names, diagnostics)


__all__ = ["NoConvergence", "SingleClassTraining", "SvmModel", "dual_objective", "rbf_kernel", "smo_solve", "train_svm_rbf"]
