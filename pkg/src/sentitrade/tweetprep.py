"""Tweet filtering and cleaning, lexicon sentiment scoring and daily aggregation.

Per-sentence scores live on a 0 (very negative) to 4 (very positive) scale;
a tweet's score is the plain mean over its sentences. Daily aggregates are
normalized to [0, 1].
"""

from __future__ import annotations

import bisect
import csv
import datetime as dt
import enum
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .ingest import TweetRecord

NEUTRAL_SCORE = 2.0
ENGLISH_THRESHOLD = 0.15

_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")
_SENTENCE_RE = re.compile(r"[.!?]")
_URL_RE = re.compile(r"http|\.com", re.IGNORECASE)


class NoTokens(ValueError):
    pass


class TweetAfterLastTradingDay(ValueError):
    pass


class RejectReason(str, enum.Enum):
    URL_AD = "UrlAd"
    DOUBLE_QUESTION_MARK = "DoubleQuestionMark"
    NON_ENGLISH = "NonEnglish"
    EMPTY_AFTER_CLEAN = "EmptyAfterClean"


@dataclass(frozen=True)
class Lexicon:
    entries: dict[str, float]
    default_score: float = NEUTRAL_SCORE

    def __post_init__(self):
        if not self.entries:
            raise ValueError("lexicon must have at least one entry")
        for token, score in self.entries.items():
            if not 0.0 <= score <= 4.0:
                raise ValueError(f"lexicon score for {token!r} outside [0, 4]: {score}")
        if not 0.0 <= self.default_score <= 4.0:
            raise ValueError(f"default score outside [0, 4]: {self.default_score}")

    def score(self, token: str) -> float:
        return self.entries.get(token, self.default_score)


@dataclass(frozen=True)
class SentimentDay:
    date: dt.date
    mean_score: float
    tweet_count: int
    score_std: float


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens; punctuation and emoji are dropped."""
    return _TOKEN_RE.findall(text.lower())


def load_lexicon(path: str | Path | None = None, default_score: float = NEUTRAL_SCORE) -> Lexicon:
    """Read a ``token,score`` CSV. With no path, the bundled lexicon is used."""
    if path is None:
        fh = resources.files("sentitrade.data").joinpath("lexicon.csv").open("r", encoding="utf-8")
    else:
        fh = open(path, newline="", encoding="utf-8")
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"token", "score"} <= set(reader.fieldnames):
            raise ValueError(f"{path or 'lexicon.csv'}: expected header token,score")
        entries = {row["token"].strip().lower(): float(row["score"]) for row in reader}
    return Lexicon(entries, default_score)


def _read_wordlist(lines: Iterable[str]) -> frozenset[str]:
    words = (ln.strip().lower() for ln in lines)
    return frozenset(w for w in words if w and not w.startswith("#"))


@lru_cache(maxsize=None)
def english_words() -> frozenset[str]:
    text = resources.files("sentitrade.data").joinpath("stopwords_en.txt").read_text(encoding="utf-8")
    return _read_wordlist(text.splitlines())


def is_english(text: str, threshold: float = ENGLISH_THRESHOLD, words: frozenset[str] | None = None) -> bool:
    """Stopword-ratio language check: share of tokens in the English list."""
    if not text:
        raise ValueError("is_english needs non-empty text")
    tokens = tokenize(text)
    if not tokens:
        return False
    vocab = english_words() if words is None else words
    hits = sum(t in vocab for t in tokens)
    return hits / len(tokens) >= threshold


def clean_tweet(text: str) -> str:
    """Drop ``#tag`` and ``@user`` tokens, turn tabs to spaces, collapse whitespace."""
    kept = [tok for tok in text.replace("\t", " ").split() if not tok.startswith(("#", "@"))]
    return " ".join(kept)


def filter_tweet(text: str, threshold: float = ENGLISH_THRESHOLD) -> RejectReason | None:
    """Return why a raw tweet is rejected, or None to keep it.

    Rules run in order: url/ad, double question mark, empty after
    cleaning, non-English.
    """
    if _URL_RE.search(text):
        return RejectReason.URL_AD
    if "??" in text:
        return RejectReason.DOUBLE_QUESTION_MARK
    cleaned = clean_tweet(text)
    if not tokenize(cleaned):
        return RejectReason.EMPTY_AFTER_CLEAN
    if not is_english(cleaned, threshold):
        return RejectReason.NON_ENGLISH
    return None


def sentence_scores(text: str, lex: Lexicon) -> list[float]:
    scores = []
    for sentence in _SENTENCE_RE.split(text):
        tokens = tokenize(sentence)
        if tokens:
            scores.append(sum(lex.score(t) for t in tokens) / len(tokens))
    return scores


def score_tweet(text: str, lex: Lexicon) -> float:
    """Mean over sentences of the mean token polarity, on the 0-4 scale."""
    scores = sentence_scores(text, lex)
    if not scores:
        raise NoTokens(f"no scorable tokens in {text!r}")
    return sum(scores) / len(scores)


def day_stats(normalized: Sequence[float]) -> tuple[float, int, float]:
    """(mean, count, population std) with the neutral fill for empty days."""
    n = len(normalized)
    if n == 0:
        return 0.5, 0, 0.0
    mean = math.fsum(normalized) / n
    if n == 1:
        return mean, 1, 0.0
    var = math.fsum((x - mean) ** 2 for x in normalized) / n
    return mean, n, math.sqrt(var)


def aggregate_daily(
    scored: Iterable[tuple[TweetRecord, float]],
    trading_days: Sequence[dt.date],
) -> list[SentimentDay]:
    """One SentimentDay per trading day from per-tweet 0-4 scores.

    A tweet belongs to the calendar date of its timestamp; tweets dated on
    a non-trading day roll forward to the next trading day.
    """
    if not trading_days:
        raise ValueError("trading_days must be non-empty")
    days = list(trading_days)
    if any(b <= a for a, b in zip(days, days[1:])):
        raise ValueError("trading_days must be strictly ascending")
    buckets: list[list[float]] = [[] for _ in days]
    for tweet, score in scored:
        if not 0.0 <= score <= 4.0:
            raise ValueError(f"score outside [0, 4]: {score}")
        i = bisect.bisect_left(days, tweet.timestamp.date())
        if i == len(days):
            raise TweetAfterLastTradingDay(
                f"tweet at {tweet.timestamp.isoformat()} is after {days[-1]}"
            )
        buckets[i].append(score / 4.0)
    out = []
    for day, bucket in zip(days, buckets):
        mean, count, std = day_stats(bucket)
        out.append(SentimentDay(day, mean, count, std))
    return out


@dataclass
class PrepResult:
    days: list[SentimentDay]
    rejections: dict[str, int]
    kept: int


def prepare_corpus(
    tweets: Iterable[TweetRecord],
    trading_days: Sequence[dt.date],
    lex: Lexicon,
    threshold: float = ENGLISH_THRESHOLD,
) -> PrepResult:
    """Filter, clean, score and aggregate a raw tweet corpus."""
    rejections = {r.value: 0 for r in RejectReason}
    scored = []
    for tweet in tweets:
        reason = filter_tweet(tweet.text, threshold)
        if reason is not None:
            rejections[reason.value] += 1
            continue
        scored.append((tweet, score_tweet(clean_tweet(tweet.text), lex)))
    return PrepResult(aggregate_daily(scored, trading_days), rejections, len(scored))


SENTIMENT_COLUMNS = ("date", "mean_score", "tweet_count", "score_std")


def write_sentiment_days(days: Sequence[SentimentDay], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SENTIMENT_COLUMNS)
        for d in days:
            w.writerow([d.date.isoformat(), repr(d.mean_score), d.tweet_count, repr(d.score_std)])


def load_sentiment_days(path: str | Path) -> list[SentimentDay]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames) != list(SENTIMENT_COLUMNS):
            raise ValueError(f"{path}: expected header {','.join(SENTIMENT_COLUMNS)}")
        return [
            SentimentDay(
                dt.date.fromisoformat(r["date"]),
                float(r["mean_score"]),
                int(r["tweet_count"]),
                float(r["score_std"]),
            )
            for r in reader
        ]
