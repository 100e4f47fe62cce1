"""Observation panels: a unit x day matrix of optional reals plus unit metadata.

Missing observations are stored as NaN.  Panels are immutable: the value
matrix is flagged read-only and every transformation returns a new panel.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from synthctl.errors import (
    DuplicateError,
    EmptyInputError,
    InvalidParameter,
    MetadataError,
    MetricError,
    ParseError,
)

__all__ = [
    "UnitMeta",
    "MissingMask",
    "Panel",
    "ingest_csv",
    "read_metadata",
    "write_metadata",
    "moving_average",
    "per_million",
    "to_daily",
    "to_cumulative",
    "negative_increments",
    "make_panel",
    "DEFAULT_SMOOTHING_WINDOW",
]

logger = logging.getLogger(__name__)

DEFAULT_SMOOTHING_WINDOW = 7
ONE_DAY = timedelta(days=1)


@dataclass(frozen=True)
class UnitMeta:
    """Per-unit metadata.

    ``measure_dates`` holds every announced intervention date; the effective
    ``intervention_date`` is the latest of them unless ``override_date`` is set.
    """

    population: int | None = None
    region: str | None = None
    measure_dates: tuple[date, ...] = ()
    override_date: date | None = None

    def __post_init__(self):
        if self.population is not None and self.population < 1:
            raise MetadataError(f"population must be >= 1, got {self.population}")

    @property
    def intervention_date(self) -> date | None:
        if self.override_date is not None:
            return self.override_date
        if not self.measure_dates:
            return None
        return max(self.measure_dates)


@dataclass(frozen=True)
class MissingMask:
    observed: np.ndarray
    observed_fraction: float

    @classmethod
    def from_values(cls, values: np.ndarray) -> "MissingMask":
        observed = ~np.isnan(values)
        frac = float(observed.mean()) if observed.size else 0.0
        return cls(observed=observed, observed_fraction=frac)


def _is_cumulative(metric: str) -> bool:
    return metric.startswith("cumulative")


@dataclass(frozen=True, eq=False)
class Panel:
    units: tuple[str, ...]
    dates: tuple[date, ...]
    values: np.ndarray
    metric: str
    meta: Mapping[str, UnitMeta] = field(default_factory=dict)

    def __post_init__(self):
        units = tuple(str(u) for u in self.units)
        dates = tuple(self.dates)
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2 or values.shape != (len(units), len(dates)):
            raise InvalidParameter(
                f"values shape {values.shape} does not match "
                f"{len(units)} units x {len(dates)} dates"
            )
        if len(set(units)) != len(units):
            raise DuplicateError("duplicate unit ids in panel")
        for prev, cur in zip(dates, dates[1:]):
            if cur - prev != ONE_DAY:
                raise InvalidParameter(f"calendar not contiguous between {prev} and {cur}")
        values.setflags(write=False)
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "meta", dict(self.meta))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Panel):
            return NotImplemented
        return (
            self.units == other.units
            and self.dates == other.dates
            and self.metric == other.metric
            and dict(self.meta) == dict(other.meta)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        span = f"{self.dates[0]}..{self.dates[-1]}" if self.dates else "empty"
        return f"Panel({self.metric!r}, {self.n_units} units x {self.n_dates} days, {span})"

    @property
    def n_units(self) -> int:
        return len(self.units)

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    @property
    def mask(self) -> MissingMask:
        return MissingMask.from_values(self.values)

    @property
    def is_cumulative(self) -> bool:
        return _is_cumulative(self.metric)

    def unit_index(self, unit: str) -> int:
        try:
            return self.units.index(unit)
        except ValueError:
            raise KeyError(f"unit {unit!r} not in panel") from None

    def date_index(self, day: date) -> int:
        """Calendar index of ``day``; may fall outside ``[0, n_dates)``."""
        return (day - self.dates[0]).days

    def row(self, unit: str) -> np.ndarray:
        return self.values[self.unit_index(unit)]

    def with_values(self, values: np.ndarray, metric: str | None = None) -> "Panel":
        return replace(self, values=values, metric=metric or self.metric)

    def select(self, units: Iterable[str]) -> "Panel":
        units = list(units)
        idx = [self.unit_index(u) for u in units]
        meta = {u: self.meta[u] for u in units if u in self.meta}
        return Panel(units, self.dates, self.values[idx], self.metric, meta)

    def shift_calendar(self, days: int) -> "Panel":
        """Same data, calendar axis moved by ``days``; metadata dates follow."""
        delta = timedelta(days=days)
        meta = {
            u: replace(
                m,
                measure_dates=tuple(d + delta for d in m.measure_dates),
                override_date=None if m.override_date is None else m.override_date + delta,
            )
            for u, m in self.meta.items()
        }
        return Panel(self.units, [d + delta for d in self.dates], self.values, self.metric, meta)

    def pad_front(self, days: int) -> "Panel":
        """Prepend ``days`` missing columns (calendar starts earlier)."""
        pad = np.full((self.n_units, days), np.nan)
        start = self.dates[0] - timedelta(days=days)
        dates = [start + timedelta(days=i) for i in range(days + self.n_dates)]
        return Panel(self.units, dates, np.hstack([pad, self.values]), self.metric, self.meta)

    def monotonicity_violations(self) -> list[tuple[str, date, float, float]]:
        """Decreases between consecutive present values of a cumulative series.

        Returns ``(unit, date, previous_value, value)`` tuples; empty for
        non-cumulative metrics.  Violations are reported, never repaired.
        """
        if not self.is_cumulative:
            return []
        out = []
        for i, unit in enumerate(self.units):
            prev = None
            for j, v in enumerate(self.values[i]):
                if math.isnan(v):
                    continue
                if v < 0 or (prev is not None and v < prev):
                    out.append((unit, self.dates[j], prev if prev is not None else 0.0, float(v)))
                prev = v
        return out

    def to_wide_csv(self, path: str | Path, comment: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["unit", *[d.isoformat() for d in self.dates]])
            for unit, row in zip(self.units, self.values):
                writer.writerow([unit, *[_fmt(v) for v in row]])


def _fmt(v: float) -> str:
    if math.isnan(v):
        return ""
    return repr(float(v))


def _parse_date(text: str, row: int) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(f"malformed date {text!r}", row=row) from None


def _parse_value(text: str, row: int) -> float:
    text = text.strip()
    if text == "":
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"malformed value {text!r}", row=row) from None


def _data_rows(path: Path):
    """Yield ``(row_number, fields)`` skipping ``#`` comment and blank lines."""
    with open(path, newline="") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields or all(not f.strip() for f in fields):
                continue
            if fields[0].startswith("#"):
                continue
            yield lineno, fields


def _calendar(days: Iterable[date]) -> list[date]:
    days = sorted(set(days))
    n = (days[-1] - days[0]).days + 1
    return [days[0] + timedelta(days=i) for i in range(n)]


def ingest_csv(
    path: str | Path,
    schema: str = "wide",
    metric: str = "value",
    meta: Mapping[str, UnitMeta] | None = None,
) -> Panel:
    """Read a panel from a wide or long CSV file.

    Wide files have a header ``unit,YYYY-MM-DD,...``; long files have
    ``unit,date,value``.  Empty cells are missing observations, and calendar
    gaps become missing columns.
    """
    path = Path(path)
    if schema not in ("wide", "long"):
        raise InvalidParameter(f"schema must be 'wide' or 'long', got {schema!r}")
    rows = list(_data_rows(path))
    if len(rows) < 2:
        raise EmptyInputError(f"{path} has no data rows")
    header_row, header = rows[0]
    cells: dict[tuple[str, date], float] = {}
    units: list[str] = []
    seen_units: set[str] = set()

    if schema == "wide":
        col_dates = [_parse_date(h, header_row) for h in header[1:]]
        if len(set(col_dates)) != len(col_dates):
            raise DuplicateError(f"duplicate date column in {path}")
        if not col_dates:
            raise EmptyInputError(f"{path} has no date columns")
        for lineno, fields in rows[1:]:
            unit = fields[0].strip()
            if unit in seen_units:
                raise DuplicateError(f"row {lineno}: duplicate unit {unit!r}")
            if len(fields) - 1 > len(col_dates):
                raise ParseError("more values than date columns", row=lineno)
            seen_units.add(unit)
            units.append(unit)
            for d, text in zip(col_dates, fields[1:]):
                cells[(unit, d)] = _parse_value(text, lineno)
        all_dates = col_dates
    else:
        names = [h.strip().lower() for h in header]
        if names[:3] != ["unit", "date", "value"]:
            raise ParseError(f"expected header unit,date,value, got {header}", row=header_row)
        for lineno, fields in rows[1:]:
            if len(fields) < 3:
                raise ParseError("expected 3 fields", row=lineno)
            unit = fields[0].strip()
            d = _parse_date(fields[1], lineno)
            if (unit, d) in cells:
                raise DuplicateError(f"row {lineno}: duplicate cell ({unit}, {d})")
            cells[(unit, d)] = _parse_value(fields[2], lineno)
            if unit not in seen_units:
                seen_units.add(unit)
                units.append(unit)
        all_dates = [d for _, d in cells]

    dates = _calendar(all_dates)
    start = dates[0]
    values = np.full((len(units), len(dates)), np.nan)
    row_of = {u: i for i, u in enumerate(units)}
    for (unit, d), v in cells.items():
        values[row_of[unit], (d - start).days] = v
    panel = Panel(units, dates, values, metric, dict(meta or {}))
    violations = panel.monotonicity_violations()
    if violations:
        logger.warning("%d monotonicity violations in cumulative panel %s", len(violations), path)
    return panel


def read_metadata(path: str | Path) -> dict[str, UnitMeta]:
    """Read ``unit,population,region,intervention_date``.

    Several announced measure dates may be listed in the date column
    separated by ``;``.
    """
    out: dict[str, UnitMeta] = {}
    rows = list(_data_rows(Path(path)))
    if not rows:
        raise EmptyInputError(f"{path} is empty")
    header = [h.strip().lower() for h in rows[0][1]]
    if header[0] != "unit":
        raise ParseError(f"metadata header must start with 'unit', got {rows[0][1]}", row=rows[0][0])
    col = {name: i for i, name in enumerate(header)}
    for lineno, fields in rows[1:]:
        fields = fields + [""] * (len(header) - len(fields))
        unit = fields[0].strip()
        if unit in out:
            raise DuplicateError(f"row {lineno}: duplicate metadata for {unit!r}")
        pop_text = fields[col["population"]].strip() if "population" in col else ""
        try:
            population = int(float(pop_text)) if pop_text else None
        except ValueError:
            raise ParseError(f"malformed population {pop_text!r}", row=lineno) from None
        region = fields[col["region"]].strip() if "region" in col else ""
        date_text = fields[col["intervention_date"]].strip() if "intervention_date" in col else ""
        measures = tuple(_parse_date(t, lineno) for t in date_text.split(";") if t.strip())
        out[unit] = UnitMeta(population=population, region=region or None, measure_dates=measures)
    return out


def write_metadata(meta: Mapping[str, UnitMeta], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["unit", "population", "region", "intervention_date"])
        for unit, m in meta.items():
            dates = ";".join(d.isoformat() for d in m.measure_dates)
            writer.writerow([unit, "" if m.population is None else m.population, m.region or "", dates])


def _trailing_mean(row: np.ndarray, window: int) -> np.ndarray:
    present = ~np.isnan(row)
    filled = np.where(present, row, 0.0)
    csum = np.concatenate([[0.0], np.cumsum(filled)])
    ccount = np.concatenate([[0], np.cumsum(present)])
    idx = np.arange(len(row))
    lo = np.maximum(idx + 1 - window, 0)
    sums = csum[idx + 1] - csum[lo]
    counts = ccount[idx + 1] - ccount[lo]
    with np.errstate(invalid="ignore", divide="ignore"):
        out = sums / counts
    out[~present] = np.nan
    return out


def moving_average(p: Panel, window: int = DEFAULT_SMOOTHING_WINDOW) -> Panel:
    """Trailing moving average over ``window`` days.

    Each present cell becomes the mean of the present values in the trailing
    window ending on that day; the first days use the shorter prefix.
    Missing cells stay missing.
    """
    if window < 1:
        raise InvalidParameter(f"window must be >= 1, got {window}")
    if window == 1:
        return p
    out = np.vstack([_trailing_mean(r, window) for r in p.values]) if p.n_units else p.values
    return p.with_values(out)


def per_million(p: Panel) -> Panel:
    pops = []
    for unit in p.units:
        m = p.meta.get(unit)
        if m is None or m.population is None:
            raise MetadataError(f"unit {unit!r} has no population metadata")
        pops.append(m.population)
    scale = 1_000_000.0 / np.asarray(pops, dtype=float)
    return p.with_values(p.values * scale[:, None], metric=f"{p.metric}-per-million")


def to_daily(p: Panel) -> Panel:
    """First differences of a cumulative panel; the first column is kept as is.

    Negative differences (reporting corrections) are preserved.  Use
    :func:`negative_increments` on the result to list them.
    """
    if not p.is_cumulative:
        raise MetricError(f"to_daily needs a cumulative metric, got {p.metric!r}")
    v = p.values
    out = np.empty_like(v)
    if v.shape[1]:
        out[:, 0] = v[:, 0]
        out[:, 1:] = np.diff(v, axis=1)
    metric = "daily" + p.metric[len("cumulative"):]
    daily = p.with_values(out, metric=metric)
    neg = negative_increments(daily)
    if neg:
        logger.warning("%d negative daily increments kept in %s", len(neg), metric)
    return daily


def to_cumulative(p: Panel) -> Panel:
    """Running sum of a daily panel (missing cells contribute nothing but stay missing)."""
    if p.is_cumulative:
        raise MetricError(f"panel {p.metric!r} is already cumulative")
    v = p.values
    out = np.cumsum(np.nan_to_num(v, nan=0.0), axis=1)
    out[np.isnan(v)] = np.nan
    metric = p.metric[len("daily"):] if p.metric.startswith("daily") else f"-{p.metric}"
    return p.with_values(out, metric="cumulative" + metric)


def negative_increments(daily: Panel) -> list[tuple[str, date, float]]:
    rows, cols = np.nonzero(np.nan_to_num(daily.values, nan=0.0) < 0)
    return [(daily.units[i], daily.dates[j], float(daily.values[i, j])) for i, j in zip(rows, cols)]


def make_panel(
    values: Sequence[Sequence[float]] | np.ndarray,
    start: date = date(2020, 1, 1),
    metric: str = "value",
    units: Sequence[str] | None = None,
    meta: Mapping[str, UnitMeta] | None = None,
) -> Panel:
    """Convenience constructor for in-memory panels on a contiguous calendar."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[None, :]
    if units is None:
        units = [f"u{i}" for i in range(values.shape[0])]
    dates = [start + timedelta(days=i) for i in range(values.shape[1])]
    return Panel(units, dates, values, metric, dict(meta or {}))
