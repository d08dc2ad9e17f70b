import numpy as np
import pytest

from sentitrade.ingest import SourceTag, validate_bars
from sentitrade.synth import OutOfRange, SynthParams, generate, generate_tweets, latent_series, true_signal
from sentitrade.tweetprep import load_lexicon, prepare_corpus


def alpha_log_returns(bars):
    c = np.log([b.close for b in bars])
    e = np.log([b.etf_close for b in bars])
    return np.diff(c) - np.diff(e)


def test_deterministic_in_seed():
    p = SynthParams(n_days=200, seed=11)
    assert generate(p) == generate(p)
    assert generate_tweets(p) == generate_tweets(p)
    assert generate(p)[0] != generate(SynthParams(n_days=200, seed=12))[0]


def test_true_signal_reproducible():
    assert true_signal(SynthParams(seed=7), 0) == 0.6320442355695731
    # Same value straight from the documented stream layout: PCG64 keyed by (seed, stream 2).
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(7, spawn_key=(2,))))
    assert true_signal(SynthParams(seed=7), 0) == rng.random()


def test_true_signal_out_of_range():
    p = SynthParams(n_days=10)
    with pytest.raises(OutOfRange):
        true_signal(p, 10)
    with pytest.raises(OutOfRange):
        true_signal(p, -1)


def test_no_signal_means_no_correlation():
    bars, days = generate(SynthParams(n_days=10_000, seed=1, signal_strength=0.0))
    m = np.array([d.mean_score for d in days])
    rho = np.corrcoef(m[:-1], alpha_log_returns(bars))[0, 1]
    assert abs(rho) < 0.03


def test_strong_signal_predicts_sign():
    p = SynthParams(n_days=1000, seed=2, noise_vol=0.01, signal_strength=0.1)
    bars, days = generate(p)
    m = np.array([d.mean_score for d in days])
    pred = np.where(m[:-1] - 0.5 >= 0, 1, -1)
    actual = np.where(alpha_log_returns(bars) >= 0, 1, -1)
    assert np.mean(pred == actual) > 0.9


def test_observation_error_vanishes_with_volume():
    p = SynthParams(n_days=500, seed=3, tweet_rate=20_000)
    _, days = generate(p)
    latent = np.array([v for _, v in latent_series(p)])
    err = np.array([d.mean_score for d in days]) - latent
    assert abs(err.mean()) < 1e-3
    assert np.abs(err).mean() < 5e-3


@pytest.mark.slow
def test_error_strictly_decreases_with_tweet_rate():
    rates = (5, 20, 80)
    errors = []
    for rate in rates:
        e = []
        for seed in range(100):
            p = SynthParams(n_days=100, seed=seed, tweet_rate=rate)
            _, days = generate(p)
            latent = np.array([v for _, v in latent_series(p)])
            e.append(np.abs(np.array([d.mean_score for d in days]) - latent).mean())
        errors.append(np.mean(e))
    assert errors[0] > errors[1] > errors[2]


@pytest.mark.parametrize("seed", range(5))
def test_prices_positive_and_valid(seed):
    bars, days = generate(SynthParams(n_days=300, seed=seed, market_vol=0.03, noise_vol=0.03))
    assert all(b.close > 0 and b.etf_close > 0 for b in bars)
    validate_bars(bars)
    assert [d.date for d in days] == [b.date for b in bars]


def test_streams_are_independent():
    a, _ = generate(SynthParams(n_days=100, seed=5, tweet_rate=10))
    b, _ = generate(SynthParams(n_days=100, seed=5, tweet_rate=99, regime_switch_prob=0.5))
    assert a == b


@pytest.mark.parametrize("tag", list(SourceTag))
def test_tweet_text_reproduces_aggregates(tag):
    p = SynthParams(n_days=60, seed=4, tweet_rate=15)
    bars, days = generate(p, tag)
    result = prepare_corpus(generate_tweets(p, tag), [b.date for b in bars], load_lexicon())
    assert result.days == days
    assert sum(result.rejections.values()) == 0


def test_ticker_set_is_weaker_and_thinner():
    p = SynthParams(n_days=2000, seed=6)
    _, product = generate(p, "product")
    _, ticker = generate(p, "ticker")
    latent = np.array([v for _, v in latent_series(p)])
    corr = lambda days: np.corrcoef([d.mean_score for d in days], latent)[0, 1]
    assert corr(ticker) < corr(product)
    assert sum(d.tweet_count for d in ticker) < sum(d.tweet_count for d in product)


@pytest.mark.parametrize(
    "kwargs",
    [{"n_days": 0}, {"noise_vol": 0.0}, {"market_vol": -1.0}, {"tweet_rate": 0.0}, {"regime_switch_prob": 1.5}, {"signal_strength": -0.1}],
)
def test_invalid_params(kwargs):
    with pytest.raises(ValueError):
        SynthParams(**kwargs)
