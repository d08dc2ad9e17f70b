"""Daily long/short backtests of the four strategies under one accounting rule.

A position chosen at the close of day t earns the target's return from t to
t + 1:

    equity_t = equity_{t-1} * (1 + position_t * R_{t+1} - cost_t)

with cost_t = cost_per_trade * |position_t - position_{t-1}| and initial
equity 1.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .classify.common import Classifier, predict_many
from .features import AlignmentMismatch, Dataset, realized_returns
from .ingest import PriceBar
from .qlearn import (
    AgentState,
    EpisodeConfig,
    QWeights,
    apply_action,
    greedy_policy,
    update,
)

TRADING_DAYS_PER_YEAR = 252


class DateRangeMismatch(ValueError):
    pass


class StrategyKind(str, enum.Enum):
    QLEARNING = "qlearning"
    ML_SIGNAL = "ml"
    BASELINE = "baseline"
    ORACLE = "oracle"


@dataclass
class Strategy:
    kind: StrategyKind
    name: str
    model: Classifier | None = None
    weights: QWeights | None = None
    config: EpisodeConfig | None = None
    online: bool = True

    @classmethod
    def qlearning(cls, weights: QWeights, config: EpisodeConfig = EpisodeConfig(), online: bool = True, name: str = "qlearning") -> "Strategy":
        return cls(StrategyKind.QLEARNING, name, weights=weights, config=config, online=online)

    @classmethod
    def ml_signal(cls, model: Classifier, name: str = "ml") -> "Strategy":
        return cls(StrategyKind.ML_SIGNAL, name, model=model)

    @classmethod
    def baseline(cls, model: Classifier, name: str = "baseline") -> "Strategy":
        return cls(StrategyKind.BASELINE, name, model=model)

    @classmethod
    def oracle(cls, name: str = "oracle") -> "Strategy":
        return cls(StrategyKind.ORACLE, name)


@dataclass
class EquityCurve:
    name: str
    dates: list[dt.date]
    positions: np.ndarray
    target_returns: np.ndarray
    costs: np.ndarray
    returns: np.ndarray
    equity: np.ndarray

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def final_equity(self) -> float:
        return float(self.equity[-1])

    def identity_error(self) -> float:
        """Largest relative deviation from the compounding identity."""
        prev = np.concatenate([[1.0], self.equity[:-1]])
        expected = prev * (1.0 + self.positions * self.target_returns - self.costs)
        return float(np.max(np.abs(self.equity - expected) / np.abs(expected)))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "position", "ret", "equity"])
            for d, p, r, e in zip(self.dates, self.positions, self.returns, self.equity):
                w.writerow([d.isoformat(), int(p), repr(float(r)), repr(float(e))])

    @classmethod
    def from_csv(cls, path: str | Path, name: str | None = None) -> "EquityCurve":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        pos = np.array([int(r["position"]) for r in rows], dtype=float)
        ret = np.array([float(r["ret"]) for r in rows])
        # Stored curves keep only the net return; the gross leg is not recoverable.
        return cls(
            name or Path(path).stem,
            [dt.date.fromisoformat(r["date"]) for r in rows],
            pos,
            np.full(len(rows), np.nan),
            np.zeros(len(rows)),
            ret,
            np.array([float(r["equity"]) for r in rows]),
        )


def next_day_returns(dataset: Dataset, bars: Sequence[PriceBar], rows: slice | None = None) -> tuple[list[dt.date], np.ndarray]:
    """Dates of the selected dataset rows and each row's realized target return to the next bar."""
    rows = rows if rows is not None else slice(dataset.split_index, None)
    dates = dataset.dates[rows]
    index = {b.date: k for k, b in enumerate(bars)}
    realized = realized_returns(bars, dataset.target_kind)
    out = np.empty(len(dates))
    for i, d in enumerate(dates):
        k = index.get(d)
        if k is None or k + 1 >= len(bars):
            raise AlignmentMismatch(f"no next-day price for {d}")
        out[i] = realized[k + 1]
    return dates, out


def _columns(dataset: Dataset, names: Sequence[str] | None) -> np.ndarray:
    if names is None:
        return dataset.X
    missing = [n for n in names if n not in dataset.feature_names]
    if missing:
        raise AlignmentMismatch(f"dataset lacks features {missing}")
    return dataset.select(list(names)).X


def run(
    strategy: Strategy,
    dataset: Dataset,
    bars: Sequence[PriceBar],
    cost_per_trade: float = 0.0,
    rows: slice | None = None,
) -> EquityCurve:
    """Simulate ``strategy`` over the dataset's test rows (or ``rows``)."""
    if cost_per_trade < 0:
        raise ValueError("cost_per_trade must be >= 0")
    dates, R = next_day_returns(dataset, bars, rows)
    if len(dates) == 0:
        raise ValueError("empty test range")
    sel = rows if rows is not None else slice(dataset.split_index, None)
    n = len(dates)
    positions = np.zeros(n)
    kind = strategy.kind

    if kind in (StrategyKind.ML_SIGNAL, StrategyKind.BASELINE):
        X = _columns(dataset, strategy.model.feature_names)[sel]
        positions[:] = predict_many(strategy.model, X)
    elif kind is StrategyKind.ORACLE:
        positions[:] = np.where(R < 0, -1.0, 1.0)
    elif kind is StrategyKind.QLEARNING:
        return _run_qlearning(strategy, _columns(dataset, strategy.weights.feature_names)[sel], dates, R, cost_per_trade)
    else:
        raise ValueError(f"unknown strategy kind {kind}")
    return _account(strategy.name, dates, positions, R, cost_per_trade)


def _account(name: str, dates, positions: np.ndarray, R: np.ndarray, cost_per_trade: float) -> EquityCurve:
    prev = np.concatenate([[0.0], positions[:-1]])
    costs = cost_per_trade * np.abs(positions - prev)
    daily = positions * R - costs
    equity = np.empty(len(daily))
    e = 1.0
    for i, r in enumerate(daily):
        e = e * (1.0 + r)
        if not e > 0:
            raise ValueError(f"{name}: equity wiped out on {dates[i]}")
        equity[i] = e
    return EquityCurve(name, list(dates), positions, R, costs, daily, equity)


def _run_qlearning(strategy: Strategy, X: np.ndarray, dates, R: np.ndarray, cost_per_trade: float) -> EquityCurve:
    cfg = strategy.config or EpisodeConfig()
    weights = strategy.weights
    n = len(dates)
    positions = np.zeros(n)
    costs = np.zeros(n)
    daily = np.zeros(n)
    equity = np.zeros(n)
    position, e = 0, 1.0
    s = AgentState(X[0], position, e)
    for i in range(n):
        a = greedy_policy(weights, cfg)(s)
        new_position = apply_action(position, a)
        costs[i] = cost_per_trade * abs(new_position - position)
        position = new_position
        positions[i] = position
        daily[i] = position * R[i] - costs[i]
        e = e * (1.0 + daily[i])
        if not e > 0:
            raise ValueError(f"{strategy.name}: equity wiped out on {dates[i]}")
        equity[i] = e
        s_next = AgentState(X[i + 1], position, e) if i + 1 < n else None
        if strategy.online:
            weights = update(weights, s, a, position * R[i], s_next, cfg)
        if s_next is not None:
            s = s_next
    return EquityCurve(strategy.name, list(dates), positions, R, costs, daily, equity)


def max_drawdown(equity: np.ndarray) -> float:
    """Largest peak-to-trough loss as a fraction of the peak, starting from 1."""
    path = np.concatenate([[1.0], np.asarray(equity, dtype=float)])
    peaks = np.maximum.accumulate(path)
    return float(np.max((peaks - path) / peaks))


@dataclass(frozen=True)
class CurveStats:
    name: str
    final_equity: float
    annualized_return: float
    max_drawdown: float
    hit_rate: float
    days: int


def curve_stats(curve: EquityCurve) -> CurveStats:
    n = len(curve)
    active = curve.positions != 0
    hits = float(np.mean(curve.returns[active] > 0)) if active.any() else 0.0
    return CurveStats(
        curve.name,
        curve.final_equity,
        curve.final_equity ** (TRADING_DAYS_PER_YEAR / n) - 1.0,
        max_drawdown(curve.equity),
        hits,
        n,
    )


def compare(curves: Sequence[EquityCurve]) -> list[CurveStats]:
    """Summary metrics per curve, best final equity first."""
    if not curves:
        return []
    ref = curves[0].dates
    for c in curves[1:]:
        if c.dates != ref:
            raise DateRangeMismatch(f"{c.name} covers different dates than {curves[0].name}")
    return sorted((curve_stats(c) for c in curves), key=lambda s: -s.final_equity)


def write_comparison(stats: Sequence[CurveStats], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "final_equity", "annualized_return", "max_drawdown", "hit_rate", "days"])
        for s in stats:
            w.writerow([s.name, f"{s.final_equity:.10g}", f"{s.annualized_return:.10g}", f"{s.max_drawdown:.10g}", f"{s.hit_rate:.10g}", s.days])


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#7f7f7f", "#9467bd", "#ff7f0e")


def equity_svg(curves: Sequence[EquityCurve], width: int = 720, height: int = 400, log_scale: bool = True) -> str:
    """Line chart of equity curves as a standalone SVG document."""
    pad_l, pad_r, pad_t, pad_b = 60, 140, 20, 40
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b
    series = [np.concatenate([[1.0], c.equity]) for c in curves]
    tf = np.log if log_scale else (lambda v: v)
    lo = min(float(tf(s).min()) for s in series)
    hi = max(float(tf(s).max()) for s in series)
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    n = max(len(s) for s in series)

    def xy(i: int, v: float) -> str:
        x = pad_l + pw * i / max(n - 1, 1)
        y = pad_t + ph * (1.0 - (float(tf(v)) - lo) / (hi - lo))
        return f"{x:.2f},{y:.2f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        v = lo + frac * (hi - lo)
        label = float(np.exp(v)) if log_scale else v
        y = pad_t + ph * (1.0 - frac)
        out.append(f'<text x="{pad_l - 6}" y="{y + 4:.2f}" font-size="11" text-anchor="end">{label:.3g}</text>')
    if curves and curves[0].dates:
        out.append(f'<text x="{pad_l}" y="{height - 12}" font-size="11">{curves[0].dates[0].isoformat()}</text>')
        out.append(f'<text x="{pad_l + pw}" y="{height - 12}" font-size="11" text-anchor="end">{curves[0].dates[-1].isoformat()}</text>')
    for k, (c, s) in enumerate(zip(curves, series)):
        color = _PALETTE[k % len(_PALETTE)]
        pts = " ".join(xy(i, v) for i, v in enumerate(s))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = pad_t + 16 * (k + 1)
        out.append(f'<line x1="{pad_l + pw + 10}" y1="{ly - 4}" x2="{pad_l + pw + 30}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{pad_l + pw + 36}" y="{ly}" font-size="12">{c.name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


__all__ = [
    "CurveStats",
    "DateRangeMismatch",
    "EquityCurve",
    "Strategy",
    "StrategyKind",
    "compare",
    "curve_stats",
    "equity_svg",
    "max_drawdown",
    "next_day_returns",
    "run",
    "write_comparison",
]
