"""Loading and validating price bars and raw tweets from local files."""

from __future__ import annotations

import csv
import datetime as dt
import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

PRICE_COLUMNS = ("date", "close", "volume", "etf_close")


class IngestError(ValueError):
    """Base class for malformed input files."""


class MissingColumn(IngestError):
    pass


class NonPositivePrice(IngestError):
    pass


class DuplicateDate(IngestError):
    pass


class GapInCalendar(IngestError):
    pass


class ExtremeReturn(IngestError):
    """A daily move large enough to wipe out a unit position."""


class MalformedLine(IngestError):
    pass


class EmptyText(IngestError):
    pass


class SourceTag(str, enum.Enum):
    TICKER = "ticker"
    PRODUCT = "product"


@dataclass(frozen=True)
class PriceBar:
    date: dt.date
    close: float
    volume: float
    etf_close: float


@dataclass(frozen=True)
class TweetRecord:
    timestamp: dt.datetime
    text: str
    source_tag: SourceTag


def next_business_day(day: dt.date) -> dt.date:
    step = 3 if day.weekday() == 4 else 2 if day.weekday() == 5 else 1
    return day + dt.timedelta(days=step)


def business_days(start: dt.date, n: int) -> list[dt.date]:
    """The first ``n`` weekdays on or after ``start``."""
    day = start
    while day.weekday() >= 5:
        day += dt.timedelta(days=1)
    out = []
    for _ in range(n):
        out.append(day)
        day = next_business_day(day)
    return out


def validate_bars(bars: list[PriceBar], row_numbers: Sequence[int] | None = None) -> None:
    """Check the series invariants; ``bars`` must already be sorted.

    Trading days are weekdays. Exchange holidays are not modelled, so a
    missing weekday is reported as a gap. ``row_numbers`` maps each bar to
    its source row for error messages (default: 1-based position).
    """
    rows = list(row_numbers) if row_numbers is not None else list(range(1, len(bars) + 1))
    for bar, i in zip(bars, rows):
        if not (bar.close > 0 and bar.etf_close > 0):
            raise NonPositivePrice(f"row {i} ({bar.date}): prices must be > 0")
        if bar.volume < 0:
            raise IngestError(f"row {i} ({bar.date}): negative volume")
        if bar.date.weekday() >= 5:
            raise GapInCalendar(f"row {i} ({bar.date}): not a weekday")
    for i in range(1, len(bars)):
        prev, cur = bars[i - 1], bars[i]
        if cur.date == prev.date:
            raise DuplicateDate(f"row {rows[i]}: date {cur.date} appears twice")
        if cur.date != next_business_day(prev.date):
            raise GapInCalendar(
                f"row {rows[i]}: {cur.date} does not follow {prev.date}"
            )
        stock = cur.close / prev.close - 1.0
        etf = cur.etf_close / prev.etf_close - 1.0
        if abs(stock) >= 1.0 or abs(stock - etf) >= 1.0:
            raise ExtremeReturn(f"row {rows[i]} ({cur.date}): daily return out of range")


def load_prices(path: str | Path) -> list[PriceBar]:
    """Read a ``date,close,volume,etf_close`` CSV into a validated series."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MissingColumn(f"{path}: empty file, expected header {','.join(PRICE_COLUMNS)}")
        header = [h.strip() for h in header]
        missing = [c for c in PRICE_COLUMNS if c not in header]
        if missing:
            raise MissingColumn(f"{path}: missing column(s) {missing}")
        idx = {c: header.index(c) for c in PRICE_COLUMNS}
        numbered = []
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            try:
                bar = PriceBar(
                    date=dt.date.fromisoformat(row[idx["date"]].strip()),
                    close=float(row[idx["close"]]),
                    volume=float(row[idx["volume"]]),
                    etf_close=float(row[idx["etf_close"]]),
                )
            except (ValueError, IndexError) as exc:
                raise IngestError(f"row {row_no}: {exc}") from exc
            if not (bar.close > 0 and bar.etf_close > 0):
                raise NonPositivePrice(f"row {row_no} ({bar.date}): prices must be > 0")
            numbered.append((bar, row_no))
    numbered.sort(key=lambda br: br[0].date)
    bars = [b for b, _ in numbered]
    validate_bars(bars, [r for _, r in numbered])
    return bars


def _fmt(x: float) -> str:
    return repr(float(x))


def write_prices(bars: list[PriceBar], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRICE_COLUMNS)
        for b in bars:
            vol = int(b.volume) if float(b.volume).is_integer() else _fmt(b.volume)
            w.writerow([b.date.isoformat(), _fmt(b.close), vol, _fmt(b.etf_close)])


def load_tweets(path: str | Path, tag: SourceTag | str) -> list[TweetRecord]:
    """Read one JSON object per line with ``ts`` and ``text`` fields."""
    tag = SourceTag(tag)
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                ts = dt.datetime.fromisoformat(obj["ts"])
                text = obj["text"]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise MalformedLine(f"{path}:{line_no}: {exc!r}") from exc
            if not isinstance(text, str):
                raise MalformedLine(f"{path}:{line_no}: text is not a string")
            if not text.strip():
                raise EmptyText(f"{path}:{line_no}: empty text")
            out.append(TweetRecord(timestamp=ts, text=text, source_tag=tag))
    return out


def write_tweets(tweets: list[TweetRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in tweets:
            fh.write(json.dumps({"ts": t.timestamp.isoformat(), "text": t.text}, ensure_ascii=False))
            fh.write("\n")


def closes(bars: list[PriceBar]) -> tuple[np.ndarray, np.ndarray]:
    return (
        np.array([b.close for b in bars], dtype=float),
        np.array([b.etf_close for b in bars], dtype=float),
    )
