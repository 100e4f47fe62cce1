"""k-means clustering of unit trends and per-group aggregates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from synthctl.errors import GroupingError, InvalidParameter
from synthctl.panel import Panel

__all__ = [
    "ClusterResult",
    "GroupAggregate",
    "kmeans",
    "kmeans_trends",
    "group_by_policy",
    "cluster_aggregates",
    "MAX_ITER",
]

MAX_ITER = 300


@dataclass(frozen=True, eq=False)
class ClusterResult:
    k: int
    assignment: dict[str, int]
    centroids: np.ndarray
    inertia: float
    seed: int
    window: tuple[int, int]
    inertia_history: list[float] = field(default_factory=list)
    excluded: list[str] = field(default_factory=list)
    n_iter: int = 0

    def members(self, cluster: int) -> list[str]:
        return sorted(u for u, c in self.assignment.items() if c == cluster)

    def partition(self) -> frozenset[frozenset[str]]:
        """Assignment as a set of sets, independent of cluster labels."""
        return frozenset(frozenset(self.members(c)) for c in range(self.k) if self.members(c))


def _sq_dist(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - C[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centers = [int(rng.integers(n))]
    d2 = _sq_dist(X, X[centers]).min(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total == 0:
            # all remaining points coincide with a center
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers.append(idx)
        d2 = np.minimum(d2, _sq_dist(X, X[[idx]])[:, 0])
    return X[centers].copy()


def _lloyd(X: np.ndarray, C: np.ndarray, max_iter: int):
    history = []
    labels = None
    for it in range(max_iter):
        d2 = _sq_dist(X, C)
        new = d2.argmin(axis=1)
        # empty clusters: move the centroid onto the point farthest from its own centroid
        for j in range(len(C)):
            if not np.any(new == j):
                own = d2[np.arange(len(X)), new]
                far = int(own.argmax())
                C[j] = X[far]
                d2 = _sq_dist(X, C)
                new = d2.argmin(axis=1)
        history.append(float(d2[np.arange(len(X)), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            return labels, C, history, it
        labels = new
        for j in range(len(C)):
            members = X[labels == j]
            if len(members):
                C[j] = members.mean(axis=0)
    return labels, C, history, max_iter


def kmeans(
    X: np.ndarray, k: int, seed: int = 0, restarts: int = 1, max_iter: int = MAX_ITER
) -> tuple[np.ndarray, np.ndarray, float, list[float], int]:
    """Seeded k-means++ / Lloyd on the rows of ``X``.

    Returns ``(labels, centroids, inertia, inertia_history, n_iter)`` of the
    best restart by inertia.  The history records the inertia after every
    assignment step and never increases.
    """
    X = np.asarray(X, dtype=float)
    if not 1 <= k <= len(X):
        raise InvalidParameter(f"k must be in [1, {len(X)}], got {k}")
    if restarts < 1:
        raise InvalidParameter("restarts must be >= 1")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        C = _plusplus(X, k, rng)
        labels, C, history, n_iter = _lloyd(X, C, max_iter)
        inertia = float(((X - C[labels]) ** 2).sum())
        if best is None or inertia < best[2]:
            best = (labels, C, inertia, history, n_iter)
    return best


def kmeans_trends(
    p: Panel,
    window: tuple[int, int] | None = None,
    k: int = 4,
    seed: int = 0,
    restarts: int = 1,
    normalize: bool = False,
) -> ClusterResult:
    """Cluster units by their raw series on calendar columns ``[start, stop)``.

    Units with a missing value inside the window are left out and listed in
    ``excluded``.  ``normalize`` z-scores each unit's window first.
    """
    start, stop = (0, p.n_dates) if window is None else window
    if not 0 <= start < stop <= p.n_dates:
        raise InvalidParameter(f"window [{start}, {stop}) outside panel of {p.n_dates} days")
    feats = p.values[:, start:stop]
    complete = ~np.isnan(feats).any(axis=1)
    units = [u for u, ok in zip(p.units, complete) if ok]
    excluded = [u for u, ok in zip(p.units, complete) if not ok]
    X = feats[complete]
    if k > len(units):
        raise InvalidParameter(f"k={k} exceeds the {len(units)} fully observed units")
    if normalize:
        sd = X.std(axis=1, keepdims=True)
        X = (X - X.mean(axis=1, keepdims=True)) / np.where(sd > 0, sd, 1.0)
    labels, C, inertia, history, n_iter = kmeans(X, k, seed, restarts)
    return ClusterResult(
        k=k,
        assignment={u: int(c) for u, c in zip(units, labels)},
        centroids=C,
        inertia=inertia,
        seed=seed,
        window=(start, stop),
        inertia_history=history,
        excluded=excluded,
        n_iter=n_iter,
    )


@dataclass(frozen=True, eq=False)
class GroupAggregate:
    label: str
    members: tuple[str, ...]
    mean_series: np.ndarray
    scalar_stats: dict[str, float]

    @property
    def member_count(self) -> int:
        return len(self.members)


def _member_mean(p: Panel, members: tuple[str, ...]) -> np.ndarray:
    rows = p.select(members).values
    present = ~np.isnan(rows)
    counts = present.sum(axis=0)
    sums = np.where(present, rows, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = sums / counts
    out[counts == 0] = np.nan
    return out


def _aggregate(
    label: str,
    members: tuple[str, ...],
    p: Panel,
    stat_window: tuple[int, int] | None,
    stats: Mapping[str, Panel],
) -> GroupAggregate:
    lo, hi = (0, p.n_dates) if stat_window is None else stat_window
    scalars = {}
    for name, sp in stats.items():
        series = _member_mean(sp, members)[lo:hi]
        series = series[~np.isnan(series)]
        scalars[name] = math.fsum(series) / len(series) if series.size else math.nan
    return GroupAggregate(label, members, _member_mean(p, members), scalars)


def group_by_policy(
    p: Panel,
    groups: Mapping[str, set[str]],
    stat_window: tuple[int, int] | None = None,
    stats: Mapping[str, Panel] | None = None,
) -> list[GroupAggregate]:
    """Aggregate fixed unit groups.

    ``mean_series`` is the per-day unweighted mean over members (missing cells
    skipped).  Each entry of ``scalar_stats`` is the mean over ``stat_window``
    of the per-day member mean of the named panel; by default the only stat is
    ``p`` itself under its metric label.
    """
    owner: dict[str, str] = {}
    for label, members in groups.items():
        for u in members:
            if u in owner:
                raise GroupingError(f"unit {u!r} is in both {owner[u]!r} and {label!r}")
            if u not in p.units:
                raise InvalidParameter(f"unit {u!r} of group {label!r} not in panel")
            owner[u] = label
    stats = {p.metric: p} if stats is None else stats
    out = []
    for label, members in groups.items():
        if not members:
            raise GroupingError(f"group {label!r} is empty")
        out.append(_aggregate(label, tuple(sorted(members)), p, stat_window, stats))
    return out


def cluster_aggregates(
    p: Panel,
    c: ClusterResult,
    stat_window: tuple[int, int] | None = None,
    stats: Mapping[str, Panel] | None = None,
) -> list[GroupAggregate]:
    """One :class:`GroupAggregate` per non-empty cluster, labelled ``cluster <j>``."""
    missing = [u for u in c.assignment if u not in p.units]
    if missing:
        raise InvalidParameter(f"clustered units missing from panel: {missing[:5]}")
    groups = {f"cluster {j}": set(c.members(j)) for j in range(c.k) if c.members(j)}
    return group_by_policy(p, groups, stat_window, stats)
