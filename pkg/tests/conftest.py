import csv

import numpy as np
import pytest

from synthctl.fixtures import fixture_path
from synthctl.panel import ingest_csv, read_metadata

# filled by test_acceptance.py, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def read_wide_plain(name):
    """Fixture CSV as {unit: [float | None]} without touching the package parser."""
    with open(fixture_path(name), newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0][1:], {r[0]: [float(x) if x else None for x in r[1:]] for r in rows[1:]}


@pytest.fixture
def eu_meta():
    return read_metadata(fixture_path("eu_meta.csv"))


@pytest.fixture
def eu_deaths(eu_meta):
    return ingest_csv(fixture_path("eu_deaths.csv"), "wide", "cumulative-deaths", eu_meta)


@pytest.fixture
def sweden_mobility():
    return ingest_csv(fixture_path("sweden_mobility.csv"), "wide", "mobility-pct")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
