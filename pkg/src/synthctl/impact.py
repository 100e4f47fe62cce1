"""Lockdown impact descriptors and counterfactual gap summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from synthctl.align import AlignedPanel
from synthctl.errors import InvalidParameter, UndefinedReductionError
from synthctl.panel import DEFAULT_SMOOTHING_WINDOW, moving_average, to_daily
from synthctl.rsc import Trajectory

__all__ = ["PeakStats", "PeakReport", "GapSummary", "peak_analysis", "gap_summary"]


@dataclass(frozen=True)
class PeakStats:
    unit_id: str
    peak_value: float
    days_to_peak: int
    value_at_intervention: float
    right_censored: bool = False


class PeakReport(NamedTuple):
    stats: list[PeakStats]
    excluded: list[str]


def peak_analysis(a: AlignedPanel, smooth_window: int = DEFAULT_SMOOTHING_WINDOW) -> PeakReport:
    """Peak of the smoothed daily series of each unit, relative to its day 0.

    Cumulative panels are differenced first.  ``value_at_intervention`` is the
    base metric (e.g. cumulative deaths) on day 0.  Ties go to the earliest
    day; a peak on the unit's last observed day is flagged ``right_censored``.
    Pass ``smooth_window=1`` for the raw series.
    """
    base = a.base
    daily = to_daily(base) if base.is_cumulative else base
    smooth = moving_average(daily, smooth_window)
    stats, excluded = [], []
    for unit, offset in a.offsets.items():
        row = smooth.row(unit)
        present = np.flatnonzero(~np.isnan(row))
        if not present.size:
            excluded.append(unit)
            continue
        peak = int(present[np.argmax(row[present])])
        stats.append(PeakStats(
            unit_id=unit,
            peak_value=float(row[peak]),
            days_to_peak=peak - offset,
            value_at_intervention=float(base.row(unit)[offset]),
            right_censored=peak == present[-1],
        ))
    return PeakReport(stats, excluded)


@dataclass(frozen=True)
class GapSummary:
    cumulative_actual: float
    cumulative_counterfactual: float
    percent_reduction: float


def gap_summary(t: Trajectory, window: tuple[int, int]) -> GapSummary:
    """Totals of actual and counterfactual over relative days ``[a, b)``.

    ``percent_reduction = (counterfactual - actual) / counterfactual * 100``.
    """
    sl = t.window_slice(*window)
    actual = t.actual[sl]
    if np.isnan(actual).any():
        raise InvalidParameter(f"actual series has missing values in window {window}")
    total_actual = math.fsum(actual)
    total_cf = math.fsum(t.counterfactual[sl])
    if not total_cf > 0:
        raise UndefinedReductionError(f"counterfactual total {total_cf:g} is not positive")
    return GapSummary(total_actual, total_cf, (total_cf - total_actual) / total_cf * 100.0)
