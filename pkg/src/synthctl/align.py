"""Re-index unit series to relative time around a per-unit alignment event."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Mapping, NamedTuple

import numpy as np

from synthctl.errors import (
    EmptyAlignmentError,
    EmptyDonorError,
    InvalidParameter,
    RangeError,
)
from synthctl.panel import DEFAULT_SMOOTHING_WINDOW, Panel, moving_average, per_million

__all__ = [
    "AlignedPanel",
    "AlignmentRule",
    "Split",
    "align_by_threshold",
    "align_by_intervention",
    "align_by_offsets",
    "infer_lockdown_from_mobility",
    "train_test_split",
    "DEFAULT_THRESHOLD",
    "DEFAULT_DROP_PCT",
    "DEFAULT_SUSTAIN_DAYS",
]

DEFAULT_THRESHOLD = 100.0
DEFAULT_DROP_PCT = 25.0
DEFAULT_SUSTAIN_DAYS = 7


@dataclass(frozen=True, eq=False)
class AlignedPanel:
    """A panel viewed in per-unit relative time.

    ``offsets[u]`` is the calendar index of unit ``u``'s day 0.  Column ``j``
    of ``rel_values`` holds relative day ``horizon[0] + j``.
    """

    base: Panel
    offsets: Mapping[str, int]
    rel_values: np.ndarray
    horizon: tuple[int, int]
    excluded: tuple[tuple[str, str], ...] = field(default=())

    @property
    def units(self) -> tuple[str, ...]:
        return tuple(self.offsets)

    def t0_date(self, unit: str) -> date:
        return self.base.dates[0] + timedelta(days=self.offsets[unit])

    def series(self, unit: str, start: int, stop: int) -> np.ndarray:
        """Values of ``unit`` on relative days ``[start, stop)``; NaN outside the data."""
        row = self.base.row(unit)
        idx = np.arange(start, stop) + self.offsets[unit]
        out = np.full(stop - start, np.nan)
        ok = (idx >= 0) & (idx < len(row))
        out[ok] = row[idx[ok]]
        return out

    def matrix(self, units, start: int, stop: int) -> np.ndarray:
        return np.vstack([self.series(u, start, stop) for u in units])

    def days_available(self, unit: str) -> int:
        """Relative days from t=0 up to and including the last observation."""
        row = self.base.row(unit)
        present = np.flatnonzero(~np.isnan(row[self.offsets[unit]:]))
        return int(present[-1] + 1) if present.size else 0


def align_by_offsets(
    p: Panel, offsets: Mapping[str, int], excluded=()
) -> AlignedPanel:
    """Build an :class:`AlignedPanel` from explicit calendar-index offsets."""
    if not offsets:
        raise EmptyAlignmentError("no unit could be aligned")
    offsets = {u: int(offsets[u]) for u in p.units if u in offsets}
    lo = min(-o for o in offsets.values())
    hi = max(p.n_dates - 1 - o for o in offsets.values())
    rel = np.full((len(offsets), hi - lo + 1), np.nan)
    for i, (unit, o) in enumerate(offsets.items()):
        row = p.row(unit)
        rel[i, -o - lo: -o - lo + p.n_dates] = row
    rel.setflags(write=False)
    return AlignedPanel(p, offsets, rel, (lo, hi), tuple(excluded))


def align_by_threshold(
    p: Panel, threshold: float = DEFAULT_THRESHOLD, per_capita: bool = False
) -> AlignedPanel:
    """Day 0 is the first day a unit's value reaches ``threshold`` (``>=``)."""
    if not threshold > 0:
        raise InvalidParameter(f"threshold must be > 0, got {threshold}")
    scan = per_million(p) if per_capita else p
    offsets, excluded = {}, []
    for unit, row in zip(scan.units, scan.values):
        hits = np.flatnonzero(np.nan_to_num(row, nan=-np.inf) >= threshold)
        if hits.size:
            offsets[unit] = int(hits[0])
        else:
            excluded.append((unit, f"never reaches {threshold:g}"))
    if not offsets:
        raise EmptyAlignmentError(f"no unit reaches threshold {threshold:g}")
    return align_by_offsets(p, offsets, excluded)


def align_by_intervention(
    p: Panel, overrides: Mapping[str, date] | None = None
) -> AlignedPanel:
    """Day 0 is each unit's intervention date (latest announced measure).

    ``overrides`` replaces the metadata date for the named units.
    """
    overrides = dict(overrides or {})
    offsets, excluded = {}, []
    for unit in p.units:
        m = p.meta.get(unit)
        day = overrides.get(unit, m.intervention_date if m else None)
        if day is None:
            excluded.append((unit, "no intervention date"))
            continue
        idx = p.date_index(day)
        if not 0 <= idx < p.n_dates:
            raise RangeError(f"intervention date {day} of unit {unit!r} outside panel calendar")
        offsets[unit] = idx
    if not offsets:
        raise EmptyAlignmentError("no unit has an intervention date")
    return align_by_offsets(p, offsets, excluded)


def infer_lockdown_from_mobility(
    mobility: Panel,
    drop_pct: float = DEFAULT_DROP_PCT,
    sustain_days: int = DEFAULT_SUSTAIN_DAYS,
    smooth_window: int = DEFAULT_SMOOTHING_WINDOW,
) -> dict[str, date]:
    """Implicit lockdown dates from percent-change-from-baseline mobility.

    A unit qualifies on the first day its trailing moving average is at or
    below ``-drop_pct`` and stays there for ``sustain_days`` consecutive days.
    The reported date is the onset of that drop: the qualifying day is moved
    back over the contiguous run of raw values that are already at or below
    ``-drop_pct``, which undoes the lag introduced by smoothing.
    """
    if sustain_days < 1:
        raise InvalidParameter("sustain_days must be >= 1")
    if sustain_days > mobility.n_dates:
        raise InvalidParameter(
            f"sustain_days {sustain_days} exceeds series length {mobility.n_dates}"
        )
    smooth = moving_average(mobility, smooth_window).values
    level = -float(drop_pct)
    out = {}
    for i, unit in enumerate(mobility.units):
        low = np.nan_to_num(smooth[i], nan=math.inf) <= level
        # runs[d] = length of the qualifying run starting at d
        runs = np.zeros(len(low) + 1, dtype=int)
        for d in range(len(low) - 1, -1, -1):
            runs[d] = runs[d + 1] + 1 if low[d] else 0
        hits = np.flatnonzero(runs[:-1] >= sustain_days)
        if not hits.size:
            continue
        day = int(hits[0])
        raw = np.nan_to_num(mobility.values[i], nan=math.inf)
        while day > 0 and raw[day - 1] <= level:
            day -= 1
        out[unit] = mobility.dates[day]
    return out


class Split(NamedTuple):
    donors: list[str]
    targets: list[str]
    split_index: int


def train_test_split(a: AlignedPanel, train_days: int = 15, test_up_to: int = 30) -> Split:
    """Donors have at least ``test_up_to`` aligned days; targets have between
    ``train_days`` and ``test_up_to`` (exclusive)."""
    if not 0 < train_days < test_up_to:
        raise InvalidParameter(f"need 0 < train_days < test_up_to, got {train_days}, {test_up_to}")
    donors, targets = [], []
    for unit in a.units:
        n = a.days_available(unit)
        if n >= test_up_to:
            donors.append(unit)
        elif n >= train_days:
            targets.append(unit)
    if not donors:
        raise EmptyDonorError(
            f"no unit has {test_up_to} aligned days",
            diagnostics=sorted(((a.days_available(u), u) for u in a.units), reverse=True)[:5],
        )
    return Split(donors, targets, train_days)


@dataclass(frozen=True)
class AlignmentRule:
    """One alignment rule; only the fields belonging to ``kind`` may be set."""

    kind: str
    threshold: float | None = None
    per_capita: bool = False
    drop_pct: float | None = None
    sustain_days: int | None = None

    _FIELDS = {
        "threshold": {"threshold", "per_capita"},
        "intervention": set(),
        "mobility": {"drop_pct", "sustain_days"},
    }

    def __post_init__(self):
        if self.kind not in self._FIELDS:
            raise InvalidParameter(f"unknown alignment rule {self.kind!r}")
        allowed = self._FIELDS[self.kind]
        set_fields = {
            name
            for name in ("threshold", "drop_pct", "sustain_days")
            if getattr(self, name) is not None
        }
        if self.per_capita:
            set_fields.add("per_capita")
        stray = set_fields - allowed
        if stray:
            raise InvalidParameter(f"rule {self.kind!r} does not take {sorted(stray)}")

    def apply(self, p: Panel, mobility: Panel | None = None) -> AlignedPanel:
        if self.kind == "threshold":
            threshold = DEFAULT_THRESHOLD if self.threshold is None else self.threshold
            return align_by_threshold(p, threshold, self.per_capita)
        if self.kind == "intervention":
            return align_by_intervention(p)
        if mobility is None:
            raise InvalidParameter("mobility rule needs a mobility panel")
        inferred = infer_lockdown_from_mobility(
            mobility,
            DEFAULT_DROP_PCT if self.drop_pct is None else self.drop_pct,
            DEFAULT_SUSTAIN_DAYS if self.sustain_days is None else self.sustain_days,
        )
        offsets, excluded = {}, []
        for unit in p.units:
            if unit not in inferred:
                excluded.append((unit, "no sustained mobility drop"))
                continue
            idx = p.date_index(inferred[unit])
            if not 0 <= idx < p.n_dates:
                raise RangeError(f"inferred lockdown {inferred[unit]} of {unit!r} outside panel calendar")
            offsets[unit] = idx
        if not offsets:
            raise EmptyAlignmentError("no unit shows a sustained mobility drop")
        return align_by_offsets(p, offsets, excluded)
