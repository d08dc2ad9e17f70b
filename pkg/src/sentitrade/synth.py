"""Seeded synthetic market with a planted sentiment -> next-day alpha signal.

Model, per trading day t:

    u_t            ~ Uniform(0, 1)                      latent sentiment
    n_t            ~ Poisson(tweet_rate), x event_multiplier on event days
    tweet k score  = 4 * Binomial(TOKENS, u_t) / TOKENS  (0-4 scale)
    etf log-ret    = market_vol * N(0, 1)
    stock log-ret  = etf log-ret + signal_strength * (u_{t-1} - 0.5) + noise_vol * N(0, 1)

The observed daily mean of normalized tweet scores is an unbiased estimate
of u_t whose sampling noise shrinks as 1/sqrt(n_t). Event days happen with
probability ``regime_switch_prob``.

Every series draws from its own PCG64 stream, keyed by ``(seed, stream id)``
through ``numpy.random.SeedSequence``, so new series never shift old ones.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import asdict, dataclass

import numpy as np

from .ingest import PriceBar, SourceTag, TweetRecord, business_days
from .tweetprep import SentimentDay, day_stats

START_DATE = dt.date(2016, 1, 4)
TOKENS = 5
EVENT_MULTIPLIER = 10.0

# Word pools whose bundled-lexicon scores are exactly 4 and 0. The first
# token of every tweet is "up"/"down" so the text passes the stopword check.
POSITIVE_WORDS = ("strong", "rally", "beat", "bullish", "gains", "soar", "record", "surge", "love", "amazing")
NEGATIVE_WORDS = ("crash", "miss", "bearish", "losses", "plunge", "fail", "fraud", "recall", "terrible", "awful")

_STREAMS = {
    "market": 0,
    "idio": 1,
    "latent": 2,
    "counts": 3,
    "scores": 4,
    "events": 5,
    "volume": 6,
    "text": 7,
    "ticker_latent": 8,
    "ticker_counts": 9,
    "ticker_scores": 10,
    "ticker_text": 11,
}


class OutOfRange(IndexError):
    pass


@dataclass(frozen=True)
class SynthParams:
    n_days: int = 500
    seed: int = 0
    signal_strength: float = 0.02
    noise_vol: float = 0.01
    market_vol: float = 0.01
    tweet_rate: float = 50.0
    regime_switch_prob: float = 0.05
    ticker_signal_share: float = 0.3
    ticker_rate_share: float = 0.5

    def __post_init__(self):
        if int(self.n_days) != self.n_days or self.n_days <= 0:
            raise ValueError(f"n_days must be a positive integer, got {self.n_days}")
        if self.signal_strength < 0:
            raise ValueError("signal_strength must be >= 0")
        for name in ("noise_vol", "market_vol", "tweet_rate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("regime_switch_prob", "ticker_signal_share", "ticker_rate_share"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


def _rng(params: SynthParams, stream: str) -> np.random.Generator:
    seq = np.random.SeedSequence(int(params.seed) & (2**64 - 1), spawn_key=(_STREAMS[stream],))
    return np.random.Generator(np.random.PCG64(seq))


def _latent(params: SynthParams) -> np.ndarray:
    return _rng(params, "latent").random(params.n_days)


def _ticker_latent(params: SynthParams) -> np.ndarray:
    """Investor-chatter sentiment: only partly tied to the product latent."""
    own = _rng(params, "ticker_latent").random(params.n_days)
    w = params.ticker_signal_share
    return w * _latent(params) + (1.0 - w) * own


def true_signal(params: SynthParams, day: int) -> float:
    """Uncorrupted latent sentiment of ``day`` (test oracle access)."""
    if not 0 <= day < params.n_days:
        raise OutOfRange(f"day {day} outside [0, {params.n_days})")
    return float(_latent(params)[day])


def _event_days(params: SynthParams) -> np.ndarray:
    return _rng(params, "events").random(params.n_days) < params.regime_switch_prob


def _tweet_counts(params: SynthParams, tag: SourceTag) -> np.ndarray:
    rate = np.full(params.n_days, float(params.tweet_rate))
    rate[_event_days(params)] *= EVENT_MULTIPLIER
    if tag is SourceTag.TICKER:
        rate = rate * params.ticker_rate_share
        return _rng(params, "ticker_counts").poisson(rate)
    return _rng(params, "counts").poisson(rate)


def _positive_tokens(params: SynthParams, tag: SourceTag) -> list[np.ndarray]:
    """Per day, the number of positive tokens in each tweet (0..TOKENS)."""
    if tag is SourceTag.TICKER:
        latent, rng = _ticker_latent(params), _rng(params, "ticker_scores")
    else:
        latent, rng = _latent(params), _rng(params, "scores")
    counts = _tweet_counts(params, tag)
    flat = rng.binomial(TOKENS, np.repeat(latent, counts))
    return np.split(flat, np.cumsum(counts)[:-1])


def _prices(params: SynthParams, dates: list[dt.date]) -> list[PriceBar]:
    n = params.n_days
    latent = _latent(params)
    etf_ret = params.market_vol * _rng(params, "market").standard_normal(n)
    idio = params.noise_vol * _rng(params, "idio").standard_normal(n)
    stock_ret = etf_ret + idio
    stock_ret[1:] += params.signal_strength * (latent[:-1] - 0.5)
    stock_ret[0] = etf_ret[0] = 0.0
    close = 100.0 * np.exp(np.cumsum(stock_ret))
    etf_close = 50.0 * np.exp(np.cumsum(etf_ret))
    volume = np.rint(1e6 * _rng(params, "volume").lognormal(0.0, 0.3, n)).astype(np.int64)
    return [
        PriceBar(d, float(c), float(v), float(e))
        for d, c, v, e in zip(dates, close, volume, etf_close)
    ]


def generate(params: SynthParams, tag: SourceTag | str = SourceTag.PRODUCT) -> tuple[list[PriceBar], list[SentimentDay]]:
    """Price bars and the daily sentiment aggregates of one tweet set."""
    tag = SourceTag(tag)
    dates = business_days(START_DATE, params.n_days)
    bars = _prices(params, dates)
    days = []
    for d, pos in zip(dates, _positive_tokens(params, tag)):
        mean, count, std = day_stats([float(k) / TOKENS for k in pos])
        days.append(SentimentDay(d, mean, count, std))
    return bars, days


def generate_tweets(params: SynthParams, tag: SourceTag | str = SourceTag.PRODUCT) -> list[TweetRecord]:
    """Tweet texts whose bundled-lexicon scores reproduce ``generate``'s aggregates."""
    tag = SourceTag(tag)
    dates = business_days(START_DATE, params.n_days)
    rng = _rng(params, "ticker_text" if tag is SourceTag.TICKER else "text")
    out = []
    for d, pos in zip(dates, _positive_tokens(params, tag)):
        n = len(pos)
        if n == 0:
            continue
        # 9:30 plus up to 6.5 hours; seconds granularity.
        offsets = np.sort(rng.integers(0, 23400, n))
        picks = rng.integers(0, len(POSITIVE_WORDS), (n, TOKENS))
        shuffles = rng.random((n, TOKENS)).argsort(axis=1)
        base = dt.datetime.combine(d, dt.time(9, 30))
        for k in range(n):
            polar = [
                (POSITIVE_WORDS if j < pos[k] else NEGATIVE_WORDS)[picks[k, j]]
                for j in range(TOKENS)
            ]
            polar = [polar[j] for j in shuffles[k]]
            lead = "up" if polar[0] in POSITIVE_WORDS else "down"
            text = " ".join([lead] + polar[1:])
            ts = base + dt.timedelta(seconds=int(offsets[k]))
            out.append(TweetRecord(ts, text, tag))
    return out


def latent_series(params: SynthParams) -> list[tuple[dt.date, float]]:
    dates = business_days(START_DATE, params.n_days)
    return list(zip(dates, (float(x) for x in _latent(params))))
