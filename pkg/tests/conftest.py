import datetime as dt
from pathlib import Path

import pytest

from sentitrade.ingest import PriceBar, business_days

DATA = Path(__file__).parent / "data"
MONDAY = dt.date(2016, 1, 4)


def make_bars(closes, etf=None, volumes=None, start=MONDAY):
    etf = etf if etf is not None else [50.0] * len(closes)
    volumes = volumes if volumes is not None else [1000.0] * len(closes)
    dates = business_days(start, len(closes))
    return [PriceBar(d, float(c), float(v), float(e)) for d, c, v, e in zip(dates, closes, volumes, etf)]


@pytest.fixture
def data_dir():
    return DATA


# Status lines from the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
