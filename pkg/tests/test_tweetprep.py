import datetime as dt
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DATA, MONDAY
from sentitrade.ingest import SourceTag, TweetRecord, business_days
from sentitrade.tweetprep import (
    Lexicon,
    NoTokens,
    RejectReason,
    TweetAfterLastTradingDay,
    aggregate_daily,
    clean_tweet,
    english_words,
    filter_tweet,
    is_english,
    load_lexicon,
    score_tweet,
)

GOLDENS = json.loads((DATA / "clean_goldens.json").read_text())


def tweet(when, text="x"):
    return TweetRecord(when, text, SourceTag.PRODUCT)


def at(day, hour=12):
    return dt.datetime.combine(day, dt.time(hour))


@pytest.mark.parametrize(
    "text, expected",
    [
        ("#Fhotoroom #iPhone https://www.fhotoroom.com/fhotos/", RejectReason.URL_AD),
        ("que pasa?? nadie sabe", RejectReason.DOUBLE_QUESTION_MARK),
        ("Great delivery numbers this quarter", None),
        ("#only #tags", RejectReason.EMPTY_AFTER_CLEAN),
        ("el coche es muy bueno", RejectReason.NON_ENGLISH),
    ],
)
def test_filter_examples(text, expected):
    assert filter_tweet(text) is expected


@pytest.mark.parametrize("case", GOLDENS, ids=range(len(GOLDENS)))
def test_cleaning_goldens(case):
    assert clean_tweet(case["text"]) == case["cleaned"]
    verdict = filter_tweet(case["text"])
    assert (verdict.value if verdict else "Keep") == case["verdict"]


def test_golden_file_has_twenty_cases():
    assert len(GOLDENS) == 20


@pytest.mark.parametrize(
    "text, cleaned",
    [("@elonmusk #TSLA to the moon", "to the moon"), ("no  extra\tspaces", "no extra spaces"), ("#only #tags", "")],
)
def test_clean_examples(text, cleaned):
    assert clean_tweet(text) == cleaned


def test_is_english_examples():
    assert is_english("the car is very good")
    assert not is_english("el coche es muy bueno")
    with pytest.raises(ValueError):
        is_english("")


def test_stopword_counts_match_examples():
    words = english_words()
    assert sum(t in words for t in "the car is very good".split()) == 3
    assert sum(t in words for t in "el coche es muy bueno".split()) == 0


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=80))
def test_filter_is_total_and_idempotent_on_kept(text):
    if filter_tweet(text) is None:
        assert filter_tweet(clean_tweet(text)) is None
        assert filter_tweet(text) is None


EXAMPLE_LEX = Lexicon({"good": 4.0, "bad": 0.0})


def test_score_sentence_average():
    assert score_tweet("good good. bad.", EXAMPLE_LEX) == 2.0
    assert score_tweet("good good bad bad. good", Lexicon({"good": 4.0, "bad": 0.0})) == 3.0
    assert score_tweet("entirely unknown words", EXAMPLE_LEX) == 2.0


def test_score_needs_tokens():
    with pytest.raises(NoTokens):
        score_tweet("?! ...", EXAMPLE_LEX)


def test_lexicon_rejects_out_of_range():
    with pytest.raises(ValueError):
        Lexicon({"x": 5.0})
    with pytest.raises(ValueError):
        Lexicon({})


def test_bundled_lexicon_scale():
    lex = load_lexicon()
    assert lex.default_score == 2.0
    assert all(0 <= v <= 4 for v in lex.entries.values())


words = st.sampled_from(["good", "bad", "meh", "great", "awful", "x"])


@settings(max_examples=200, deadline=None)
@given(
    st.dictionaries(st.sampled_from(["good", "bad", "great", "awful"]), st.floats(0, 4), min_size=1),
    st.lists(st.lists(words, min_size=1, max_size=6), min_size=1, max_size=4),
)
def test_score_bounded_by_lexicon(entries, sentences):
    lex = Lexicon(entries)
    s = score_tweet(". ".join(" ".join(ws) for ws in sentences), lex)
    lo = min(min(entries.values()), lex.default_score)
    hi = max(max(entries.values()), lex.default_score)
    assert lo - 1e-12 <= s <= hi + 1e-12
    assert 0 <= s <= 4


def test_aggregate_one_day_example():
    days = aggregate_daily([(tweet(at(MONDAY)), s) for s in (4, 4, 0, 0)], [MONDAY])
    d = days[0]
    assert (d.mean_score, d.tweet_count, d.score_std) == (0.5, 4, 0.5)


def test_aggregate_neutral_fill_and_weekend_roll():
    trading = business_days(MONDAY, 6)  # Mon..Fri, next Mon
    saturday = dt.date(2016, 1, 9)
    days = aggregate_daily([(tweet(at(saturday)), 4.0)], trading)
    assert [(d.mean_score, d.tweet_count, d.score_std) for d in days[:5]] == [(0.5, 0, 0.0)] * 5
    assert days[5].date == dt.date(2016, 1, 11) and days[5].tweet_count == 1 and days[5].mean_score == 1.0


def test_tweet_after_last_day():
    with pytest.raises(TweetAfterLastTradingDay):
        aggregate_daily([(tweet(at(dt.date(2016, 1, 5))), 2.0)], [MONDAY])


day_index = st.integers(0, 9)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(day_index, st.floats(0, 4)), max_size=40))
def test_aggregate_length_and_mirror_symmetry(scored):
    trading = business_days(MONDAY, 10)
    records = [(tweet(at(trading[i])), s) for i, s in scored]
    mirrored = [(t, 4.0 - s) for t, s in records]
    a, b = aggregate_daily(records, trading), aggregate_daily(mirrored, trading)
    assert len(a) == len(b) == 10
    for x, y in zip(a, b):
        assert 0 <= x.mean_score <= 1
        assert math.isclose(y.mean_score, 1 - x.mean_score, abs_tol=1e-12)
        assert math.isclose(y.score_std, x.score_std, abs_tol=1e-12)
        if x.tweet_count <= 1:
            assert x.score_std == 0
