"""Robust synthetic control.

The donor matrix is zero-filled where observations are missing, rescaled by
the observed fraction, and truncated to its leading singular values.  The
target's pre-intervention series is then regressed (minimum-norm least
squares, unconstrained weights) on the denoised pre-intervention donor block,
and the counterfactual is the same linear combination of the denoised donors
over the whole horizon.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from synthctl.align import AlignedPanel
from synthctl.errors import (
    DegenerateInputError,
    DegenerateModelError,
    InsufficientPretreatmentError,
    InvalidParameter,
    UndefinedReductionError,
)

__all__ = [
    "BlockMatrix",
    "RscModel",
    "Trajectory",
    "ShiftResult",
    "DEFAULT_ENERGY",
    "DEFAULT_IMPUTE_ITER",
    "energy_rank",
    "observed_fraction",
    "denoise",
    "fit",
    "fit_aligned",
    "project",
    "counterfactual_shifted_intervention",
    "normalized_weights",
    "top_weights",
]

DEFAULT_ENERGY = 0.99
DEFAULT_IMPUTE_ITER = 10
# singular values below this fraction of the largest are treated as zero in the regression
_RCOND = 1e-10


@dataclass(frozen=True)
class BlockMatrix:
    """The observation matrix split into donor/treated rows and pre/post columns."""

    d_pre: np.ndarray
    d_post: np.ndarray
    i_pre: np.ndarray
    i_post: np.ndarray

    @classmethod
    def split(cls, X: np.ndarray, n_donors: int, t0: int) -> "BlockMatrix":
        X = np.asarray(X, dtype=float)
        if not 0 < n_donors <= X.shape[0] or not 0 <= t0 <= X.shape[1]:
            raise InvalidParameter(f"cannot split {X.shape} at {n_donors} donors, t0={t0}")
        return cls(X[:n_donors, :t0], X[:n_donors, t0:], X[n_donors:, :t0], X[n_donors:, t0:])

    @property
    def donors(self) -> np.ndarray:
        return np.hstack([self.d_pre, self.d_post])

    @property
    def treated(self) -> np.ndarray:
        return np.hstack([self.i_pre, self.i_post])


def observed_fraction(X: np.ndarray) -> float:
    X = np.asarray(X, dtype=float)
    return float((~np.isnan(X)).mean()) if X.size else 0.0


def energy_rank(singular_values: np.ndarray, energy: float = DEFAULT_ENERGY) -> int:
    """Smallest k whose leading singular values hold at least ``energy`` of the
    total squared spectrum."""
    s = np.asarray(singular_values, dtype=float)
    total = float(np.sum(s**2))
    if total == 0.0:
        raise DegenerateInputError("matrix has an all-zero spectrum")
    if energy >= 1.0:
        return int(np.count_nonzero(s))
    cum = np.cumsum(s**2) / total
    return int(np.searchsorted(cum, energy - 1e-15) + 1)


def _rescaled(X: np.ndarray, p_hat: float | None = None) -> tuple[np.ndarray, float]:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidParameter(f"expected a 2-D matrix, got shape {X.shape}")
    p = observed_fraction(X) if p_hat is None else p_hat
    if p <= 0.0:
        raise DegenerateInputError("matrix has no observed entries")
    return np.where(np.isnan(X), 0.0, X) / p, p


def _truncate(Z: np.ndarray, rank: int) -> np.ndarray:
    U, s, Vt = np.linalg.svd(Z, full_matrices=False)
    return (U[:, :rank] * s[:rank]) @ Vt[:rank]


def _refine(X: np.ndarray, M: np.ndarray, rank: int, iters: int) -> np.ndarray:
    """Hard-impute passes: refill missing cells from the current estimate and re-truncate."""
    missing = np.isnan(X)
    if not missing.any():
        return M
    for _ in range(iters):
        M = _truncate(np.where(missing, M, X), rank)
    return M


def denoise(
    X: np.ndarray, rank: int, p_hat: float | None = None, impute_iter: int = DEFAULT_IMPUTE_ITER
) -> np.ndarray:
    """Hard singular-value thresholding of a partially observed matrix.

    Parameters
    ----------
    X : ndarray
        Matrix with NaN marking missing entries.
    rank : int
        Number of singular values kept.
    p_hat : float, optional
        Observation probability used for rescaling; defaults to the observed
        fraction of ``X``.
    impute_iter : int
        Extra passes that refill the missing cells with the current estimate
        (observed cells unchanged, no rescaling) and truncate again.  Zero
        gives the plain zero-fill estimate.  Fully observed input is
        unaffected.

    Returns
    -------
    ndarray
        Rank-``rank`` estimate of the mean matrix.
    """
    Z, _ = _rescaled(X, p_hat)
    if not 1 <= rank <= min(Z.shape):
        raise InvalidParameter(f"rank must be in [1, {min(Z.shape)}], got {rank}")
    return _refine(np.asarray(X, dtype=float), _truncate(Z, rank), rank, impute_iter)


@dataclass(frozen=True, eq=False)
class RscModel:
    donor_ids: tuple[str, ...]
    weights: np.ndarray
    kept_rank: int
    singular_values: np.ndarray
    t0: int
    p_hat: float
    denoised_donors: np.ndarray | None = field(default=None, repr=False)
    target: np.ndarray | None = field(default=None, repr=False)
    target_id: str | None = None
    rel_start: int = 0
    ridge: float = 0.0
    impute_iter: int = 0

    @property
    def train_window(self) -> tuple[int, int]:
        return (self.rel_start, self.rel_start + self.t0)

    def pre_fit_rmse(self) -> float:
        """RMSE of the fitted synthetic series against the target's present pre values."""
        if self.target is None or self.denoised_donors is None:
            raise DegenerateModelError("model has no target or denoised donors attached")
        fitted = self.weights @ self.denoised_donors[:, : self.t0]
        y = self.target[: self.t0]
        ok = ~np.isnan(y)
        return float(np.sqrt(np.mean((fitted[ok] - y[ok]) ** 2)))

    def to_dict(self) -> dict:
        return {
            "donor_ids": list(self.donor_ids),
            "weights": [float(w) for w in self.weights],
            "kept_rank": int(self.kept_rank),
            "singular_values": [float(s) for s in self.singular_values],
            "t0": int(self.t0),
            "p_hat": float(self.p_hat),
            "target_id": self.target_id,
            "rel_start": int(self.rel_start),
            "ridge": float(self.ridge),
            "impute_iter": int(self.impute_iter),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(
        cls, d: dict, donors: np.ndarray | None = None, target: np.ndarray | None = None
    ) -> "RscModel":
        """Rebuild a model; passing the donor matrix re-derives the denoised donors."""
        denoised = None
        if donors is not None:
            D = np.atleast_2d(np.asarray(donors, dtype=float))
            order = _canonical_order(D)
            Z, _ = _rescaled(D[order], d["p_hat"])
            k = d["kept_rank"]
            M = _refine(D[order], _truncate(Z, k), k, int(d.get("impute_iter", 0)))
            denoised = M[np.argsort(order)]
        return cls(
            donor_ids=tuple(d["donor_ids"]),
            weights=np.asarray(d["weights"], dtype=float),
            kept_rank=int(d["kept_rank"]),
            singular_values=np.asarray(d["singular_values"], dtype=float),
            t0=int(d["t0"]),
            p_hat=float(d["p_hat"]),
            denoised_donors=denoised,
            target=None if target is None else np.asarray(target, dtype=float),
            target_id=d.get("target_id"),
            rel_start=int(d.get("rel_start", 0)),
            ridge=float(d.get("ridge", 0.0)),
            impute_iter=int(d.get("impute_iter", 0)),
        )

    @classmethod
    def from_json(cls, text: str, donors=None, target=None) -> "RscModel":
        return cls.from_dict(json.loads(text), donors, target)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Actual vs counterfactual series of one target.

    ``rel_days[j]`` labels position ``j``; ``t0`` is the index of the first
    post-intervention position.
    """

    target_id: str | None
    actual: np.ndarray
    counterfactual: np.ndarray
    t0: int
    rel_days: np.ndarray
    tag: str | None = None

    @property
    def gap(self) -> np.ndarray:
        return self.counterfactual - self.actual

    def window_slice(self, start: int, stop: int) -> slice:
        """Positions covering relative days ``[start, stop)``."""
        first = int(self.rel_days[0])
        if start < first or stop > first + len(self.rel_days) or start >= stop:
            raise InvalidParameter(
                f"window [{start}, {stop}) outside trajectory days "
                f"[{first}, {first + len(self.rel_days)})"
            )
        return slice(start - first, stop - first)

    def rows(self):
        for r, a, c, g in zip(self.rel_days, self.actual, self.counterfactual, self.gap):
            yield int(r), a, c, g


def _canonical_order(D: np.ndarray) -> np.ndarray:
    """Row order that depends only on row contents (NaN sorts as +inf)."""
    keys = np.nan_to_num(D, nan=np.inf, posinf=np.inf)
    return np.lexsort(keys.T[::-1])


def fit(
    donors: np.ndarray,
    target: np.ndarray,
    t0: int,
    rank: int | None = None,
    *,
    energy: float = DEFAULT_ENERGY,
    ridge: float = 0.0,
    impute_iter: int = DEFAULT_IMPUTE_ITER,
    donor_ids: Sequence[str] | None = None,
    target_id: str | None = None,
    rel_start: int = 0,
) -> RscModel:
    """Fit synthetic-control weights for one target.

    Parameters
    ----------
    donors : ndarray, shape (n_donors, T)
        Donor series over the whole horizon; NaN marks missing entries.
    target : ndarray
        Target series; positions ``[0, t0)`` are the training window.  Any
        later positions are kept as the actual post-period series.
    t0 : int
        Number of pre-intervention positions.
    rank : int, optional
        Singular values kept.  ``None`` picks the smallest rank holding
        ``energy`` of the pre-period spectrum.
    ridge : float
        Optional L2 penalty; 0 gives the minimum-norm least-squares solution.
    impute_iter : int
        Hard-impute refinement passes over missing donor cells (see
        :func:`denoise`); no effect on fully observed donors.
    """
    D = np.atleast_2d(np.asarray(donors, dtype=float))
    y = np.asarray(target, dtype=float)
    n, T = D.shape
    if n < 1:
        raise InvalidParameter("need at least one donor")
    if t0 <= 1:
        raise InsufficientPretreatmentError(f"t0 must be > 1, got {t0}")
    if t0 > T:
        raise InvalidParameter(f"t0={t0} beyond donor horizon {T}")
    y_pre = y[:t0]
    present = ~np.isnan(y_pre)
    if present.sum() < 2:
        raise InsufficientPretreatmentError("target has fewer than 2 observed pre-period values")
    if ridge < 0:
        raise InvalidParameter("ridge must be >= 0")
    ids = tuple(donor_ids) if donor_ids is not None else tuple(f"donor{i}" for i in range(n))
    if len(ids) != n:
        raise InvalidParameter(f"{len(ids)} donor ids for {n} donor rows")

    order = _canonical_order(D)
    Dc = D[order]
    Z, p_hat = _rescaled(Dc)
    s_pre = np.linalg.svd(Z[:, :t0], compute_uv=False)
    if rank is None:
        k = energy_rank(s_pre, energy)
    else:
        if rank < 1:
            raise InvalidParameter(f"rank must be >= 1, got {rank}")
        k = rank
    k = min(k, n, t0)
    M = _refine(Dc, _truncate(Z, k), k, impute_iter)

    A = M[:, :t0].T[present]
    b = y_pre[present]
    if ridge > 0:
        beta_c = np.linalg.solve(A.T @ A + ridge * np.eye(n), A.T @ b)
    else:
        beta_c = np.linalg.pinv(A, rcond=_RCOND) @ b

    inverse = np.empty_like(order)
    inverse[order] = np.arange(n)
    return RscModel(
        donor_ids=ids,
        weights=beta_c[inverse],
        kept_rank=k,
        singular_values=s_pre,
        t0=t0,
        p_hat=p_hat,
        denoised_donors=M[inverse],
        target=y.copy(),
        target_id=target_id,
        rel_start=rel_start,
        ridge=ridge,
        impute_iter=impute_iter,
    )


def fit_aligned(
    a: AlignedPanel,
    target: str,
    donors: Sequence[str],
    train_days: int,
    start: int = 0,
    stop: int | None = None,
    rank: int | None = None,
    **kwargs,
) -> RscModel:
    """Fit on relative days ``[start, stop)`` of an aligned panel, training on
    the first ``train_days`` of them."""
    donors = [d for d in donors if d != target]
    if stop is None:
        stop = max(a.days_available(d) for d in donors)
    D = a.matrix(donors, start, stop)
    y = a.series(target, start, stop)
    return fit(D, y, train_days, rank, donor_ids=donors, target_id=target, rel_start=start, **kwargs)


def project(model: RscModel, horizon: tuple[int, int] | None = None) -> Trajectory:
    """Counterfactual ``weights @ denoised_donors`` over ``horizon`` (relative days)."""
    if model.denoised_donors is None:
        raise DegenerateModelError("model has no denoised donors attached")
    T = model.denoised_donors.shape[1]
    lo, hi = model.rel_start, model.rel_start + T
    start, stop = (lo, hi) if horizon is None else horizon
    if not lo <= start < stop <= hi:
        raise InvalidParameter(f"horizon [{start}, {stop}) outside denoised range [{lo}, {hi})")
    cols = slice(start - lo, stop - lo)
    # sum donors in canonical order so the result does not depend on input order
    order = _canonical_order(model.denoised_donors)
    cf = model.weights[order] @ model.denoised_donors[order][:, cols]
    actual = np.full(T, np.nan)
    if model.target is not None:
        m = min(T, len(model.target))
        actual[:m] = model.target[:m]
    return Trajectory(
        target_id=model.target_id,
        actual=actual[cols],
        counterfactual=cf,
        t0=model.t0 - (start - lo),
        rel_days=np.arange(start, stop),
    )


@dataclass(frozen=True, eq=False)
class ShiftResult:
    """Counterfactual under a shifted intervention date.

    ``percent_reduction`` is how much lower the counterfactual total is than
    the actual total at the horizon end, as a percentage of the actual.
    """

    trajectory: Trajectory
    model: RscModel
    actual_total: float
    counterfactual_total: float
    percent_reduction: float


def counterfactual_shifted_intervention(
    donors: AlignedPanel,
    target: np.ndarray,
    target_t0: int,
    shift_days: int,
    pre_days: int,
    horizon: int,
    rank: int | None = None,
    *,
    donor_ids: Sequence[str] | None = None,
    target_id: str | None = None,
    cumulative: bool = True,
    **kwargs,
) -> ShiftResult:
    """Fit and project as if the target's intervention happened ``shift_days``
    later (negative = earlier) than it did.

    Parameters
    ----------
    donors : AlignedPanel
        Donors aligned on their own intervention dates.
    target : ndarray
        The target's series on its own calendar.
    target_t0 : int
        Calendar index of the target's actual intervention.
    pre_days : int
        Pre-intervention days used for training (fewer if the series starts later).
    horizon : int
        Post-intervention days, counted from the actual intervention; every
        shift ends on the same calendar day.
    cumulative : bool
        Whether the series are cumulative; otherwise totals are running sums.

    Relative-day labels of the returned trajectory are counted from the
    actual (unshifted) intervention.
    """
    target = np.asarray(target, dtype=float)
    shifted = target_t0 + shift_days
    if shifted < 0 or shifted >= len(target):
        raise InsufficientPretreatmentError(
            f"shifted intervention index {shifted} outside target series"
        )
    pre_start = max(0, shifted - pre_days)
    n_pre = shifted - pre_start
    if n_pre < 2:
        raise InsufficientPretreatmentError(
            f"shift {shift_days} leaves {n_pre} pre-period points"
        )
    n_post = horizon - shift_days
    if n_post < 1:
        raise InvalidParameter(f"horizon {horizon} ends before shifted intervention")
    ids = list(donor_ids) if donor_ids is not None else [u for u in donors.units if u != target_id]
    D = donors.matrix(ids, -n_pre, n_post)
    y = np.full(n_pre + n_post, np.nan)
    seg = target[pre_start: pre_start + n_pre + n_post]
    y[: len(seg)] = seg
    model = fit(
        D, y, n_pre, rank, donor_ids=ids, target_id=target_id,
        rel_start=shift_days - n_pre, **kwargs,
    )
    traj = project(model)
    if cumulative:
        actual_total = traj.actual[-1]
        cf_total = traj.counterfactual[-1]
    else:
        actual_total = math.fsum(traj.actual)
        cf_total = math.fsum(traj.counterfactual)
    if not actual_total > 0:
        raise UndefinedReductionError("actual total at horizon end is not positive")
    reduction = (actual_total - cf_total) / actual_total * 100.0
    return ShiftResult(traj, model, float(actual_total), float(cf_total), float(reduction))


def normalized_weights(model: RscModel) -> np.ndarray:
    """Weights divided by their L1 norm (signs kept)."""
    total = float(np.sum(np.abs(model.weights)))
    if total == 0.0:
        raise DegenerateModelError("all donor weights are zero")
    return model.weights / total


def top_weights(model: RscModel, k: int = 8) -> list[tuple[str, float]]:
    """The ``k`` donors with the largest absolute normalized weight."""
    w = normalized_weights(model)
    order = sorted(range(len(w)), key=lambda i: (-abs(w[i]), i))[:k]
    return [(model.donor_ids[i], float(w[i])) for i in order]
