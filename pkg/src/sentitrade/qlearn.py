"""Q-learning trading agent with linear function approximation.

Q(s, a; w) = w . phi(s, a), where phi copies the state vector
[market features, one-hot position, 1] into the block of action ``a``.
After each transition (s, a, r, s') the weights take one SGD step:

    w <- w - lr * (Q(s, a; w) - (r + discount * V(s'))) * phi(s, a)
    V(s') = max over valid actions a' of Q(s', a'; w)   (0 when s' is terminal)

Positions are -1, 0, +1 units of the target; Buy and Sell move one unit.
At the leverage limit the move past it is masked out, and once equity
falls to the stop-loss only the action toward flat remains.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .features import AlignmentMismatch

POSITIONS = (-1, 0, 1)


class DimensionMismatch(ValueError):
    pass


class TradeAction(enum.IntEnum):
    """Ordered as the greedy tie-break: Buy < Hold < Sell."""

    BUY = 0
    HOLD = 1
    SELL = 2

    @property
    def step(self) -> int:
        return {TradeAction.BUY: 1, TradeAction.HOLD: 0, TradeAction.SELL: -1}[self]


ACTIONS = tuple(TradeAction)


@dataclass(frozen=True)
class AgentState:
    market: np.ndarray
    position: int = 0
    equity_ratio: float = 1.0

    def __post_init__(self):
        if self.position not in POSITIONS:
            raise ValueError(f"position must be one of {POSITIONS}, got {self.position}")
        if not self.equity_ratio > 0:
            raise ValueError(f"equity_ratio must be > 0, got {self.equity_ratio}")


@dataclass(frozen=True)
class EpisodeConfig:
    epsilon0: float = 0.2
    epsilon_decay: float = 0.999
    epsilon_floor: float = 0.01
    leverage_limit: int = 1
    stop_loss: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in ("epsilon0", "epsilon_decay", "epsilon_floor"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.leverage_limit not in (0, 1):
            raise ValueError("leverage_limit must be 0 or 1")
        if not 0.0 < self.stop_loss < 1.0:
            raise ValueError("stop_loss must lie in (0, 1)")

    def epsilon(self, step: int) -> float:
        return max(self.epsilon_floor, self.epsilon0 * self.epsilon_decay**step)


def state_dim(n_market: int) -> int:
    return n_market + len(POSITIONS) + 1


def state_vector(s: AgentState) -> np.ndarray:
    onehot = np.zeros(len(POSITIONS))
    onehot[POSITIONS.index(s.position)] = 1.0
    return np.concatenate([np.asarray(s.market, dtype=float), onehot, [1.0]])


def phi(s: AgentState, a: TradeAction) -> np.ndarray:
    """Block one-hot features: the state vector in action ``a``'s block, zeros elsewhere."""
    v = state_vector(s)
    out = np.zeros(len(ACTIONS) * len(v))
    out[a * len(v) : (a + 1) * len(v)] = v
    return out


@dataclass
class QWeights:
    w: np.ndarray
    learning_rate: float = 0.05
    discount: float = 0.95
    feature_names: list[str] | None = None

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")

    @classmethod
    def zeros(cls, n_market: int, **kwargs) -> "QWeights":
        return cls(np.zeros(len(ACTIONS) * state_dim(n_market)), **kwargs)

    @property
    def n_market(self) -> int:
        return len(self.w) // len(ACTIONS) - len(POSITIONS) - 1

    def to_dict(self, config: EpisodeConfig | None = None, extra: dict | None = None) -> dict:
        d = {
            "w": self.w.tolist(),
            "learning_rate": self.learning_rate,
            "discount": self.discount,
            "feature_names": self.feature_names,
            "actions": [a.name for a in ACTIONS],
            "positions": list(POSITIONS),
        }
        if config is not None:
            d["config"] = asdict(config)
        if extra:
            d.update(extra)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "QWeights":
        return cls(np.array(d["w"], dtype=float), float(d["learning_rate"]), float(d["discount"]), d.get("feature_names"))


def q_value(weights: QWeights, s: AgentState, a: TradeAction) -> float:
    f = phi(s, a)
    if f.shape != weights.w.shape:
        raise DimensionMismatch(f"phi has {f.size} entries, weights have {weights.w.size}")
    return float(weights.w @ f)


def valid_actions(s: AgentState, cfg: EpisodeConfig) -> list[TradeAction]:
    if s.equity_ratio <= cfg.stop_loss:
        if s.position > 0:
            return [TradeAction.SELL]
        if s.position < 0:
            return [TradeAction.BUY]
        return [TradeAction.HOLD]
    out = []
    for a in ACTIONS:
        if abs(s.position + a.step) <= cfg.leverage_limit or a is TradeAction.HOLD:
            out.append(a)
    return out


def apply_action(position: int, a: TradeAction) -> int:
    new = position + a.step
    if new not in POSITIONS:
        raise ValueError(f"{a.name} from position {position} leaves the position space")
    return new


def _greedy(weights: QWeights, s: AgentState, actions: Sequence[TradeAction]) -> TradeAction:
    best, best_q = actions[0], q_value(weights, s, actions[0])
    for a in actions[1:]:
        q = q_value(weights, s, a)
        if q > best_q:
            best, best_q = a, q
    return best


def select_action(
    weights: QWeights, s: AgentState, cfg: EpisodeConfig, rng: np.random.Generator, epsilon: float
) -> TradeAction:
    """Epsilon-greedy over the valid actions. Always consumes one uniform draw."""
    actions = valid_actions(s, cfg)
    if rng.random() < epsilon:
        return actions[int(rng.integers(len(actions)))]
    return _greedy(weights, s, actions)


def greedy_policy(weights: QWeights, cfg: EpisodeConfig) -> Callable[[AgentState], TradeAction]:
    def policy(s: AgentState) -> TradeAction:
        return _greedy(weights, s, valid_actions(s, cfg))

    return policy


def state_value(weights: QWeights, s: AgentState | None, cfg: EpisodeConfig) -> float:
    if s is None:
        return 0.0
    return max(q_value(weights, s, a) for a in valid_actions(s, cfg))


def td_update(w: np.ndarray, features: np.ndarray, target: float, learning_rate: float) -> np.ndarray:
    """One SGD step of the squared TD error for a linear value model."""
    if features.shape != w.shape:
        raise DimensionMismatch(f"features have {features.size} entries, weights have {w.size}")
    return w - learning_rate * (float(w @ features) - target) * features


def update(
    weights: QWeights,
    s: AgentState,
    a: TradeAction,
    reward: float,
    s_next: AgentState | None,
    cfg: EpisodeConfig,
) -> QWeights:
    """Return weights after one Q-learning step; ``s_next=None`` marks a terminal transition."""
    target = reward + weights.discount * state_value(weights, s_next, cfg)
    return replace(weights, w=td_update(weights.w, phi(s, a), target, weights.learning_rate))


@dataclass
class TrainingResult:
    weights: QWeights
    epoch_rewards: list[float]
    steps: int
    final_epsilon: float
    config: EpisodeConfig
    history: dict = field(default_factory=dict)


def _check_aligned(X: np.ndarray, returns: np.ndarray) -> None:
    if X.ndim != 2 or len(X) != len(returns):
        raise AlignmentMismatch(f"{len(X)} feature rows vs {len(returns)} returns")
    if not np.all(np.isfinite(returns)):
        raise AlignmentMismatch("returns contain non-finite values")


def run_training(
    X: np.ndarray,
    returns: np.ndarray,
    cfg: EpisodeConfig = EpisodeConfig(),
    epochs: int = 50,
    learning_rate: float = 0.05,
    discount: float = 0.95,
    feature_names: list[str] | None = None,
) -> TrainingResult:
    """Train over the days in order, ``epochs`` times.

    ``returns[i]`` is the target's return from day i to day i + 1. The
    reward for acting on day i is the position after the action times
    ``returns[i]``; equity compounds by the same amount. Each epoch starts
    flat with equity 1. The learning rate in epoch e (1-based) is
    ``learning_rate / sqrt(e)``; epsilon decays per step.
    """
    X = np.asarray(X, dtype=float)
    returns = np.asarray(returns, dtype=float)
    _check_aligned(X, returns)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    weights = QWeights.zeros(X.shape[1], learning_rate=learning_rate, discount=discount, feature_names=feature_names)
    n = len(X)
    step = 0
    epoch_rewards = []
    for epoch in range(1, epochs + 1):
        weights = replace(weights, learning_rate=learning_rate / math.sqrt(epoch))
        position, equity = 0, 1.0
        total = 0.0
        s = AgentState(X[0], position, equity)
        for i in range(n):
            a = select_action(weights, s, cfg, rng, cfg.epsilon(step))
            position = apply_action(position, a)
            r = position * returns[i]
            equity *= 1.0 + r
            s_next = AgentState(X[i + 1], position, equity) if i + 1 < n else None
            weights = update(weights, s, a, r, s_next, cfg)
            total += r
            step += 1
            if s_next is not None:
                s = s_next
        epoch_rewards.append(total)
    return TrainingResult(weights, epoch_rewards, step, cfg.epsilon(step), cfg)


def greedy_rollout(weights: QWeights, X: np.ndarray, returns: np.ndarray, cfg: EpisodeConfig) -> np.ndarray:
    """Per-day rewards of the frozen greedy policy over one pass."""
    policy = greedy_policy(weights, cfg)
    position, equity = 0, 1.0
    out = np.empty(len(X))
    for i in range(len(X)):
        position = apply_action(position, policy(AgentState(X[i], position, equity)))
        out[i] = position * returns[i]
        equity *= 1.0 + out[i]
    return out


def save_weights(result: TrainingResult, path: str | Path, extra: dict | None = None) -> None:
    d = result.weights.to_dict(result.config, {"epoch_rewards": result.epoch_rewards, **(extra or {})})
    Path(path).write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")


def load_weights(path: str | Path) -> tuple[QWeights, EpisodeConfig | None]:
    d = json.loads(Path(path).read_text())
    cfg = EpisodeConfig(**d["config"]) if "config" in d else None
    return QWeights.from_dict(d), cfg
