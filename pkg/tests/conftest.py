from __future__ import annotations

from datetime import datetime

import pytest

from railagent.catalog import load_corpus
from railagent.config import data_path
from railagent.dates import fixed_clock
from railagent.ticketing import load_timetable
from railagent.weather import FixtureProvider

CLOCK_DT = datetime(2025, 6, 9, 9, 0, 0)


@pytest.fixture(scope="session")
def corpus():
    return load_corpus(data_path("corpus_sample.jsonl"))


@pytest.fixture(scope="session")
def timetable():
    return load_timetable(data_path("timetable_sample.jsonl"))


@pytest.fixture()
def clock():
    return fixed_clock(CLOCK_DT)


@pytest.fixture()
def weather_provider(clock):
    return FixtureProvider.from_file(data_path("weather_sample.yaml"), clock)
