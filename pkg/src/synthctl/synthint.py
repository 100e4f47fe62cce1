"""Synthetic interventions: a target's trajectory under a donor region's regime.

Donors are restricted to units at a similar stage of spread on the reference
date (cumulative cases per million within a relative tolerance of the
target's).  The target's series before the reference date is fit on those
donors, and the projection after it is compared with what actually happened.

NMSE convention: the mean over post-reference days of the squared gap,
divided by the square of the target's cumulative level on the reference date.
The squared denominator keeps the quantity dimensionless, so the same NMSE
comes out whether counts are raw or per million.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Sequence

import numpy as np

from synthctl.errors import EmptyDonorError, InvalidParameter, MetadataError, SynthctlError
from synthctl.panel import Panel, per_million
from synthctl.rsc import RscModel, Trajectory, fit, project

__all__ = [
    "StageFilter",
    "BinSpec",
    "SiResult",
    "SiComparison",
    "BinRow",
    "RegionComparison",
    "default_rank",
    "stage_values",
    "filter_donors",
    "synthetic_intervention",
    "nmse",
    "compare_regions",
]


@dataclass(frozen=True)
class StageFilter:
    reference_date: date
    tolerance: float = 0.5

    def __post_init__(self):
        if not 0 < self.tolerance < 1:
            raise InvalidParameter(f"tolerance must be in (0, 1), got {self.tolerance}")


@dataclass(frozen=True)
class BinSpec:
    """Bin edges in cases per million; bins are ``[e_i, e_{i+1})``, the last one closed."""

    edges: tuple[float, ...]

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise InvalidParameter(f"bin edges must be strictly increasing, >= 2 of them: {edges}")
        object.__setattr__(self, "edges", edges)

    @property
    def bins(self) -> list[tuple[float, float]]:
        return list(zip(self.edges, self.edges[1:]))

    def assign(self, value: float) -> int | None:
        """Bin index of ``value``, or ``None`` when out of range."""
        e = self.edges
        if not e[0] <= value <= e[-1]:
            return None
        if value == e[-1]:
            return len(e) - 2
        return int(np.searchsorted(e, value, side="right") - 1)


def default_rank(n_donors: int) -> int:
    """Three singular values once the donor count is at least ten times that;
    otherwise one per ten donors (at least one)."""
    return 3 if n_donors >= 30 else max(1, n_donors // 10)


def _per_million(panel: Panel) -> Panel:
    return panel if panel.metric.endswith("-per-million") else per_million(panel)


def stage_values(panel: Panel, reference_date: date) -> dict[str, float]:
    """Cases per million of every unit on ``reference_date``."""
    cpm = _per_million(panel)
    j = cpm.date_index(reference_date)
    if not 0 <= j < cpm.n_dates:
        raise InvalidParameter(f"reference date {reference_date} outside panel calendar")
    return {u: float(v) for u, v in zip(cpm.units, cpm.values[:, j])}


def filter_donors(
    donor_region: Iterable[str], target: str, panel: Panel, f: StageFilter,
    stages: dict[str, float] | None = None,
) -> set[str]:
    """Donors whose cases per million on the reference date lie within
    ``tolerance`` (relative, inclusive) of the target's."""
    stages = stage_values(panel, f.reference_date) if stages is None else stages
    if target not in stages or math.isnan(stages[target]):
        raise MetadataError(f"target {target!r} has no value on {f.reference_date}")
    ref = stages[target]
    keep, misses = set(), []
    for d in donor_region:
        if d == target:
            continue
        v = stages.get(d, math.nan)
        if math.isnan(v):
            continue
        if abs(v - ref) <= f.tolerance * ref:
            keep.add(d)
        else:
            misses.append((abs(v - ref) / ref if ref else math.inf, d))
    if not keep:
        raise EmptyDonorError(
            f"no donor within {f.tolerance:.0%} of {target!r} ({ref:.1f} per million)",
            diagnostics=sorted(misses)[:5],
        )
    return keep


@dataclass(frozen=True, eq=False)
class SiResult:
    trajectory: Trajectory
    model: RscModel
    donors: tuple[str, ...]
    reference_value: float


def synthetic_intervention(
    target: str,
    donor_region: Iterable[str],
    panel: Panel,
    f: StageFilter,
    rank: int | None = None,
    pre_days: int | None = None,
    region_tag: str | None = None,
    **fit_kwargs,
) -> SiResult:
    """Counterfactual of ``target`` after the reference date under the donor regime.

    Works on cumulative cases per million.  ``rank`` defaults to
    :func:`default_rank` of the filtered donor count; ``pre_days`` limits the
    training window (default: everything before the reference date).
    """
    cpm = _per_million(panel)
    stages = stage_values(cpm, f.reference_date)
    donors = sorted(filter_donors(donor_region, target, cpm, f, stages))
    t0 = cpm.date_index(f.reference_date)
    start = 0 if pre_days is None else max(0, t0 - pre_days)
    D = cpm.select(donors).values[:, start:]
    y = cpm.row(target)[start:]
    k = default_rank(len(donors)) if rank is None else rank
    model = fit(D, y, t0 - start, k, donor_ids=donors, target_id=target,
                rel_start=start - t0, **fit_kwargs)
    traj = project(model)
    traj = Trajectory(traj.target_id, traj.actual, traj.counterfactual, traj.t0,
                      traj.rel_days, tag=region_tag)
    return SiResult(traj, model, tuple(donors), stages[target])


def nmse(traj: Trajectory, reference_value: float, power: float = 2.0) -> float:
    """Post-period mean squared gap over ``reference_value ** power``."""
    post = slice(traj.t0, None)
    gap = traj.gap[post]
    gap = gap[~np.isnan(gap)]
    if not gap.size:
        raise InvalidParameter("no observed post-period values")
    if not reference_value > 0:
        raise InvalidParameter(f"reference value must be > 0, got {reference_value}")
    return float(np.mean(gap**2) / reference_value**power)


@dataclass(frozen=True)
class SiComparison:
    target_id: str
    in_donor_region: bool
    nmse: float
    stage: float
    bin: int | None
    donor_count: int
    squared_error_sum: float = 0.0
    n_days: int = 0


@dataclass(frozen=True)
class BinRow:
    bin_low: float
    bin_high: float
    mean_nmse_in: float | None
    mean_nmse_out: float | None
    count_in: int
    count_out: int


@dataclass(frozen=True)
class RegionComparison:
    rows: list[BinRow]
    comparisons: list[SiComparison]
    out_of_range: list[str]
    failed: list[tuple[str, str]]


def _mean_or_none(items: list[SiComparison], pooled: bool) -> float | None:
    if not items:
        return None
    if pooled:
        return math.fsum(c.squared_error_sum for c in items) / sum(c.n_days for c in items)
    return math.fsum(c.nmse for c in items) / len(items)


def compare_regions(
    targets: Iterable[str],
    donor_region: Iterable[str],
    panel: Panel,
    f: StageFilter,
    bins: BinSpec | Sequence[float],
    rank: int | None = None,
    *,
    pre_days: int | None = None,
    power: float = 2.0,
    pooled: bool = False,
    jobs: int = 1,
) -> RegionComparison:
    """Mean NMSE per case-density bin, for targets inside and outside the donor region.

    Inside the region the NMSE measures prediction error (the regime is the
    target's own); outside it measures the gap to the donor-regime
    counterfactual.  ``pooled`` averages squared gaps over all county-days
    of a bin instead of averaging per-county NMSE values.  Targets for which
    no donor passes the stage filter are listed in ``failed``.
    """
    if not isinstance(bins, BinSpec):
        bins = BinSpec(tuple(bins))
    region = set(donor_region)
    targets = sorted(set(targets))
    cpm = _per_million(panel)
    stages = stage_values(cpm, f.reference_date)

    def run(target: str):
        try:
            res = synthetic_intervention(target, region, cpm, f, rank, pre_days)
        except SynthctlError as exc:
            return target, None, f"{type(exc).__name__}: {exc}"
        return target, res, None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, targets))
    else:
        results = [run(t) for t in targets]

    comparisons, failed, out_of_range = [], [], []
    for target, res, err in results:
        if res is None:
            failed.append((target, err))
            continue
        ref = res.reference_value
        post = res.trajectory.gap[res.trajectory.t0:]
        post = post[~np.isnan(post)]
        b = bins.assign(stages[target])
        comparisons.append(SiComparison(
            target_id=target,
            in_donor_region=target in region,
            nmse=nmse(res.trajectory, ref, power),
            stage=stages[target],
            bin=b,
            donor_count=len(res.donors),
            squared_error_sum=float(np.sum(post**2) / ref**power),
            n_days=int(post.size),
        ))
        if b is None:
            out_of_range.append(target)

    rows = []
    for i, (lo, hi) in enumerate(bins.bins):
        members = [c for c in comparisons if c.bin == i]
        ins = [c for c in members if c.in_donor_region]
        outs = [c for c in members if not c.in_donor_region]
        rows.append(BinRow(lo, hi, _mean_or_none(ins, pooled), _mean_or_none(outs, pooled),
                           len(ins), len(outs)))
    return RegionComparison(rows, comparisons, out_of_range, failed)
