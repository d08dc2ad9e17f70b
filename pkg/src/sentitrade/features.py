"""Technical and sentiment features, min-max normalization and labeled datasets."""

from __future__ import annotations

import csv
import datetime as dt
import enum
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .ingest import PriceBar, SourceTag, closes
from .tweetprep import SentimentDay


class InsufficientHistory(ValueError):
    pass


class AlignmentMismatch(ValueError):
    pass


class TargetKind(str, enum.Enum):
    ALPHA = "alpha"
    TOTAL_RETURN = "total"


@dataclass(frozen=True)
class Windows:
    momentum: int = 5
    volatility: int = 10
    sent_momentum: int = 3
    sent_reversal: int = 5

    def __post_init__(self):
        for name, k in asdict(self).items():
            if int(k) != k or k < 1:
                raise ValueError(f"window {name} must be a positive integer")
        if self.volatility < 2:
            raise ValueError("volatility window needs at least 2 returns")

    @property
    def technical_lag(self) -> int:
        return max(self.momentum, self.volatility)

    @property
    def sentiment_lag(self) -> int:
        return max(self.sent_momentum, self.sent_reversal - 1)


@dataclass
class FeatureTable:
    """Per-day feature values: ``values[i, j]`` is feature ``names[j]`` on ``dates[i]``."""

    dates: list[dt.date]
    names: list[str]
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.dates)

    def row(self, i: int) -> dict[str, float]:
        return dict(zip(self.names, map(float, self.values[i])))

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def since(self, start: dt.date) -> "FeatureTable":
        i = self.dates.index(start)
        return FeatureTable(self.dates[i:], list(self.names), self.values[i:])


def technical_names(windows: Windows) -> list[str]:
    return ["ret_1", "volume", f"momentum_{windows.momentum}", f"vol_{windows.volatility}"]


def sentiment_names(windows: Windows) -> list[str]:
    return ["tweet_count", "sent_mean", "sent_xvol", f"sent_mom_{windows.sent_momentum}", "sent_rev"]


def technical_features(bars: Sequence[PriceBar], windows: Windows = Windows()) -> FeatureTable:
    """Close-of-day technical features; the first ``technical_lag`` days are dropped.

    ret_1 is the log return into day t, volume is day t's volume,
    momentum_k the k-day log return ending at t, vol_k the sample std of
    the last k daily log returns.
    """
    lag = windows.technical_lag
    if len(bars) < lag + 1:
        raise InsufficientHistory(f"need at least {lag + 1} bars, got {len(bars)}")
    close, _ = closes(list(bars))
    rets = _log_returns(close)
    k, v = windows.momentum, windows.volatility
    rows = []
    for t in range(lag, len(bars)):
        window = rets[t - v + 1 : t + 1]
        rows.append([rets[t], bars[t].volume, math.log(close[t] / close[t - k]), float(np.std(window, ddof=1))])
    return FeatureTable([b.date for b in bars[lag:]], technical_names(windows), np.array(rows, dtype=float))


def sentiment_features(days: Sequence[SentimentDay], windows: Windows = Windows()) -> FeatureTable:
    """Daily sentiment features; the first ``sentiment_lag`` days are dropped.

    sent_rev is minus the gap between today's mean score and its trailing
    ``sent_reversal``-day average (today included), so a positive value means
    the score sits below its recent level and pressure is toward reversal.
    """
    lag = windows.sentiment_lag
    if len(days) < lag + 1:
        raise InsufficientHistory(f"need at least {lag + 1} sentiment days, got {len(days)}")
    m = np.array([d.mean_score for d in days], dtype=float)
    km, kr = windows.sent_momentum, windows.sent_reversal
    rows = []
    for t in range(lag, len(days)):
        trailing = m[t - kr + 1 : t + 1].mean()
        rows.append([days[t].tweet_count, m[t], days[t].score_std, m[t] - m[t - km], -(m[t] - trailing)])
    return FeatureTable([d.date for d in days[lag:]], sentiment_names(windows), np.array(rows, dtype=float))


@dataclass
class Normalizer:
    """Per-feature affine min-max map fitted on training rows."""

    names: list[str]
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, table: FeatureTable, n_train: int) -> "Normalizer":
        if n_train < 1:
            raise ValueError("need at least one training row")
        train = table.values[:n_train]
        return cls(list(table.names), train.min(axis=0), train.max(axis=0))

    def transform(self, values: np.ndarray) -> np.ndarray:
        span = self.hi - self.lo
        const = span <= 0
        scaled = (values - self.lo) / np.where(const, 1.0, span)
        scaled[:, const] = 0.5
        return np.clip(scaled, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"names": self.names, "lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(list(d["names"]), np.array(d["lo"], dtype=float), np.array(d["hi"], dtype=float))


def normalize(raw: FeatureTable, n_train: int) -> tuple[FeatureTable, Normalizer]:
    """Min-max scale every feature by its range on the first ``n_train`` rows.

    Later rows are clipped into [0, 1]; features constant on the training
    range map to 0.5.
    """
    norm = Normalizer.fit(raw, n_train)
    return FeatureTable(list(raw.dates), list(raw.names), norm.transform(raw.values)), norm


def _log_returns(prices: np.ndarray) -> np.ndarray:
    # Ratio first: equal moves in two series give exactly equal returns.
    return np.concatenate([[np.nan], np.log(prices[1:] / prices[:-1])])


def target_returns(bars: Sequence[PriceBar], kind: TargetKind) -> np.ndarray:
    """Log return of the prediction target from day t-1 to t (entry 0 is nan)."""
    close, etf = closes(list(bars))
    ret = _log_returns(close)
    if TargetKind(kind) is TargetKind.ALPHA:
        ret = ret - _log_returns(etf)
    return ret


def realized_returns(bars: Sequence[PriceBar], kind: TargetKind) -> np.ndarray:
    """Simple (accounting) return of one unit of the target from t-1 to t.

    For alpha this is the stock's simple return minus the ETF's, i.e. the
    P&L of a dollar-neutral long-stock/short-ETF pair.
    """
    close, etf = closes(list(bars))
    ret = np.concatenate([[np.nan], close[1:] / close[:-1] - 1.0])
    if TargetKind(kind) is TargetKind.ALPHA:
        ret = ret - np.concatenate([[np.nan], etf[1:] / etf[:-1] - 1.0])
    return ret


def sign_label(x: float) -> int:
    """+1 / -1 with zero resolved to +1."""
    return -1 if x < 0 else 1


@dataclass(frozen=True)
class FeatureRow:
    date: dt.date
    values: dict[str, float]
    label: int
    target_kind: TargetKind


@dataclass
class Dataset:
    """Chronological feature matrix with next-day sign labels.

    ``X[i]`` describes the close of ``dates[i]``; ``y[i]`` is the sign of the
    target return from ``dates[i]`` to the following trading day. Rows
    before ``split_index`` form the training half.
    """

    dates: list[dt.date]
    feature_names: list[str]
    X: np.ndarray
    y: np.ndarray
    split_index: int
    target_kind: TargetKind
    windows: Windows = field(default_factory=Windows)
    normalizer: Normalizer | None = None
    source_tag: SourceTag | None = None

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def rows(self) -> list[FeatureRow]:
        return [
            FeatureRow(d, dict(zip(self.feature_names, map(float, x))), int(lab), self.target_kind)
            for d, x, lab in zip(self.dates, self.X, self.y)
        ]

    def select(self, names: Sequence[str]) -> "Dataset":
        """Same rows restricted to a subset of feature columns, in the given order."""
        idx = [self.feature_names.index(n) for n in names]
        norm = None
        if self.normalizer is not None:
            norm = Normalizer(list(names), self.normalizer.lo[idx], self.normalizer.hi[idx])
        return replace(self, feature_names=list(names), X=self.X[:, idx], normalizer=norm)

    def train(self) -> tuple[np.ndarray, np.ndarray]:
        return self.X[: self.split_index], self.y[: self.split_index]

    def test(self) -> tuple[np.ndarray, np.ndarray]:
        return self.X[self.split_index :], self.y[self.split_index :]

    def test_dates(self) -> list[dt.date]:
        return self.dates[self.split_index :]

    def metadata(self) -> dict:
        return {
            "split_index": self.split_index,
            "target_kind": self.target_kind.value,
            "windows": asdict(self.windows),
            "feature_names": self.feature_names,
            "normalization": None if self.normalizer is None else self.normalizer.to_dict(),
            "source_tag": None if self.source_tag is None else self.source_tag.value,
            "n_rows": len(self),
        }

    def save(self, csv_path: str | Path, sidecar_path: str | Path | None = None) -> None:
        csv_path = Path(csv_path)
        sidecar_path = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "label", *self.feature_names])
            for d, lab, x in zip(self.dates, self.y, self.X):
                w.writerow([d.isoformat(), int(lab), *(repr(float(v)) for v in x)])
        with open(sidecar_path, "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, csv_path: str | Path, sidecar_path: str | Path | None = None) -> "Dataset":
        csv_path = Path(csv_path)
        sidecar_path = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
        meta = json.loads(Path(sidecar_path).read_text())
        with open(csv_path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            names = header[2:]
            if names != meta["feature_names"]:
                raise ValueError(f"{csv_path}: columns disagree with {sidecar_path}")
            dates, labels, values = [], [], []
            for row in reader:
                dates.append(dt.date.fromisoformat(row[0]))
                labels.append(int(row[1]))
                values.append([float(v) for v in row[2:]])
        norm = meta.get("normalization")
        tag = meta.get("source_tag")
        return cls(
            dates=dates,
            feature_names=names,
            X=np.array(values, dtype=float).reshape(len(dates), len(names)),
            y=np.array(labels, dtype=int),
            split_index=int(meta["split_index"]),
            target_kind=TargetKind(meta["target_kind"]),
            windows=Windows(**meta["windows"]),
            normalizer=None if norm is None else Normalizer.from_dict(norm),
            source_tag=None if tag is None else SourceTag(tag),
        )


def build_dataset(
    bars: Sequence[PriceBar],
    sent_days: Sequence[SentimentDay],
    target: TargetKind | str = TargetKind.ALPHA,
    windows: Windows = Windows(),
    source_tag: SourceTag | None = None,
) -> Dataset:
    """Join technical and sentiment features and label each day by the next day's target sign."""
    target = TargetKind(target)
    if [b.date for b in bars] != [d.date for d in sent_days]:
        raise AlignmentMismatch("price bars and sentiment days cover different dates")
    tech = technical_features(bars, windows)
    sent = sentiment_features(sent_days, windows)
    start = max(tech.dates[0], sent.dates[0])
    tech, sent = tech.since(start), sent.since(start)
    ret = target_returns(bars, target)
    offset = len(bars) - len(tech)
    # The last day has no next-day target and is dropped.
    n = len(tech) - 1
    if n < 2:
        raise InsufficientHistory("too few days left to build a labeled dataset")
    labels = np.array([sign_label(ret[offset + i + 1]) for i in range(n)], dtype=int)
    raw = FeatureTable(tech.dates[:n], tech.names + sent.names, np.hstack([tech.values[:n], sent.values[:n]]))
    split = math.ceil(n / 2)
    table, norm = normalize(raw, split)
    return Dataset(
        dates=table.dates,
        feature_names=table.names,
        X=table.values,
        y=labels,
        split_index=split,
        target_kind=target,
        windows=windows,
        normalizer=norm,
        source_tag=source_tag,
    )
