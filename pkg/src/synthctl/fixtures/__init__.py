"""Small bundled panels used by tests, notebooks and the CLI examples."""

from importlib.resources import files
from pathlib import Path

NAMES = (
    "eu_deaths.csv",
    "eu_meta.csv",
    "sweden_mobility.csv",
    "us_temperature.csv",
    "us_daily_cases_pm.csv",
    "us_daily_deaths_pm.csv",
)


def fixture_path(name: str) -> Path:
    if name not in NAMES:
        raise KeyError(f"unknown fixture {name!r}")
    return Path(str(files(__name__) / name))
