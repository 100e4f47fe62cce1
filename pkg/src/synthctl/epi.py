"""SIR ground-truth panels for validating the estimators.

The simulator is a forward-Euler SIR model whose transmission rate switches
from ``beta0`` to ``beta_lockdown`` on intervention day ``t0``.  Daily cases
are the susceptibles lost during each day; deaths are a fixed fraction of
cases ``report_lag`` days later.  Observation noise is multiplicative and
log-normal with unit mean, so reported counts stay positive.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date, timedelta
from typing import Mapping

import numpy as np

from synthctl.errors import InvalidParameter, StabilityError
from synthctl.panel import Panel, UnitMeta

__all__ = [
    "SirConfig",
    "SirRun",
    "SyntheticPanel",
    "simulate",
    "generate_panel",
    "factor_panel",
    "mobility_panel",
    "PRESET_REGIMES",
]


@dataclass(frozen=True)
class SirConfig:
    population: int = 1_000_000
    beta0: float = 0.25
    beta_lockdown: float = 0.08
    gamma: float = 0.1
    ifr: float = 0.01
    seed_infected: float = 10.0
    t0: int = 30
    noise_sigma: float = 0.0
    report_lag: int = 21

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvalidParameter(f"gamma must be > 0, got {self.gamma}")
        if not 0 <= self.beta_lockdown <= self.beta0:
            raise InvalidParameter(
                f"need 0 <= beta_lockdown <= beta0, got {self.beta_lockdown}, {self.beta0}"
            )
        if not 0 < self.ifr < 1:
            raise InvalidParameter(f"ifr must be in (0, 1), got {self.ifr}")
        if self.population < 1 or not 0 <= self.seed_infected <= self.population:
            raise InvalidParameter("need population >= 1 and 0 <= seed_infected <= population")
        if self.noise_sigma < 0 or self.report_lag < 0:
            raise InvalidParameter("noise_sigma and report_lag must be >= 0")

    @property
    def r0(self) -> float:
        return self.beta0 / self.gamma


@dataclass(frozen=True, eq=False)
class SirRun:
    """Daily series of one simulation.

    ``susceptible``/``infected``/``recovered`` hold the state at the start of
    each day plus the final state (length ``days + 1``).  ``max_conservation_error``
    is the largest ``|S + I + R - N|`` seen at any integration step.
    """

    cases: np.ndarray
    deaths: np.ndarray
    true_cases: np.ndarray
    susceptible: np.ndarray
    infected: np.ndarray
    recovered: np.ndarray
    max_conservation_error: float

    @property
    def cumulative_cases(self) -> np.ndarray:
        return np.cumsum(self.cases)

    @property
    def cumulative_deaths(self) -> np.ndarray:
        return np.cumsum(self.deaths)


def simulate(cfg: SirConfig, days: int, seed: int = 0, dt: float = 1.0) -> SirRun:
    """Integrate the model for ``days`` days with step ``dt`` (days)."""
    if days < 1:
        raise InvalidParameter(f"days must be >= 1, got {days}")
    steps = int(round(1.0 / dt))
    if steps < 1 or abs(steps * dt - 1.0) > 1e-12:
        raise InvalidParameter(f"dt must divide one day, got {dt}")
    if cfg.beta0 * dt > 5:
        raise StabilityError(f"beta0*dt = {cfg.beta0 * dt:g} > 5")
    if cfg.gamma * dt > 1:
        raise StabilityError(f"gamma*dt = {cfg.gamma * dt:g} > 1")

    N = float(cfg.population)
    S, I, R = N - cfg.seed_infected, float(cfg.seed_infected), 0.0
    Ss, Is, Rs = np.empty(days + 1), np.empty(days + 1), np.empty(days + 1)
    true_cases = np.empty(days)
    worst = abs(S + I + R - N)
    for d in range(days):
        Ss[d], Is[d], Rs[d] = S, I, R
        beta = cfg.beta0 if d < cfg.t0 else cfg.beta_lockdown
        start = S
        for _ in range(steps):
            new = min(beta * S * I / N * dt, S)
            rec = cfg.gamma * I * dt
            S -= new
            I += new - rec
            # closed population: R is the complement, so rounding never drifts the total
            R = N - S - I
            worst = max(worst, abs(S + I + R - N))
        true_cases[d] = start - S
    Ss[days], Is[days], Rs[days] = S, I, R

    lag = cfg.report_lag
    true_deaths = np.zeros(days)
    if lag < days:
        true_deaths[lag:] = cfg.ifr * true_cases[: days - lag]

    rng = np.random.default_rng(seed)
    sigma = cfg.noise_sigma
    z = rng.standard_normal((2, days))
    factor = np.exp(sigma * z - 0.5 * sigma**2) if sigma > 0 else np.ones((2, days))
    return SirRun(
        cases=true_cases * factor[0],
        deaths=true_deaths * factor[1],
        true_cases=true_cases,
        susceptible=Ss,
        infected=Is,
        recovered=Rs,
        max_conservation_error=worst,
    )


# Rates per day. gamma = 1/10; R0 = 2.5 before the intervention.
PRESET_REGIMES: dict[str, SirConfig] = {
    "strict": SirConfig(beta0=0.25, beta_lockdown=0.08, gamma=0.1, seed_infected=20, t0=40),
    "loose": SirConfig(beta0=0.25, beta_lockdown=0.13, gamma=0.1, seed_infected=20, t0=40),
    "none": SirConfig(beta0=0.25, beta_lockdown=0.25, gamma=0.1, seed_infected=20, t0=40),
}


@dataclass(frozen=True, eq=False)
class SyntheticPanel:
    cases: Panel
    deaths: Panel
    labels: dict[str, str]
    configs: dict[str, SirConfig]

    def units_in(self, regime: str) -> list[str]:
        return [u for u, r in self.labels.items() if r == regime]


_JITTERED = ("beta0", "beta_lockdown", "gamma", "seed_infected", "population")


def _jittered(
    cfg: SirConfig, rng: np.random.Generator, jitter: Mapping[str, float], t0_jitter: int
) -> SirConfig:
    def f(name):
        j = jitter.get(name, 0.0)
        return 1.0 + rng.uniform(-j, j) if j > 0 else 1.0

    beta0 = cfg.beta0 * f("beta0")
    beta_lock = min(cfg.beta_lockdown * f("beta_lockdown"), beta0)
    gamma = cfg.gamma * f("gamma")
    seed_inf = cfg.seed_infected * f("seed_infected")
    population = max(1, int(round(cfg.population * f("population"))))
    t0 = cfg.t0 + (int(rng.integers(-t0_jitter, t0_jitter + 1)) if t0_jitter > 0 else 0)
    return replace(
        cfg,
        beta0=beta0,
        beta_lockdown=beta_lock,
        gamma=gamma,
        seed_infected=min(seed_inf, population),
        population=population,
        t0=t0,
    )


def generate_panel(
    n_units: int,
    regimes: Mapping[str, SirConfig],
    jitter: float | Mapping[str, float] = 0.1,
    seed: int = 0,
    days: int = 180,
    start: date = date(2020, 3, 1),
    t0_jitter: int = 0,
) -> SyntheticPanel:
    """Simulate ``n_units`` units split evenly (in order) across ``regimes``.

    Rates, seed infections and population are jittered multiplicatively by a
    uniform factor in ``[1 - jitter, 1 + jitter]``; a mapping gives a separate
    jitter per field (``beta0``, ``beta_lockdown``, ``gamma``, ``seed_infected``,
    ``population``; absent fields are not jittered).  The intervention day is
    moved by a uniform integer in ``[-t0_jitter, t0_jitter]``.  Panels are cumulative
    counts; each unit's intervention date is recorded in its metadata.
    """
    if n_units < 2:
        raise InvalidParameter(f"n_units must be >= 2, got {n_units}")
    if not regimes:
        raise InvalidParameter("need at least one regime")
    if not isinstance(jitter, Mapping):
        jitter = dict.fromkeys(_JITTERED, float(jitter))
    unknown = set(jitter) - set(_JITTERED)
    if unknown:
        raise InvalidParameter(f"cannot jitter {sorted(unknown)}")
    if not all(0 <= j < 1 for j in jitter.values()):
        raise InvalidParameter(f"jitter values must be in [0, 1), got {dict(jitter)}")
    rng = np.random.default_rng(seed)
    names = list(regimes)
    width = len(str(n_units - 1))
    cases, deaths, labels, configs, meta = [], [], {}, {}, {}
    units = []
    for i in range(n_units):
        regime = names[i * len(names) // n_units]
        unit = f"{regime}-{i:0{width}d}"
        cfg = _jittered(regimes[regime], rng, jitter, t0_jitter)
        run = simulate(cfg, days, seed=int(rng.integers(2**31)))
        units.append(unit)
        cases.append(run.cumulative_cases)
        deaths.append(run.cumulative_deaths)
        labels[unit] = regime
        configs[unit] = cfg
        meta[unit] = UnitMeta(
            population=cfg.population,
            region=regime,
            measure_dates=(start + timedelta(days=cfg.t0),) if cfg.t0 < days else (),
        )
    dates = [start + timedelta(days=d) for d in range(days)]
    return SyntheticPanel(
        cases=Panel(units, dates, np.vstack(cases), "cumulative-cases", meta),
        deaths=Panel(units, dates, np.vstack(deaths), "cumulative-deaths", meta),
        labels=labels,
        configs=configs,
    )


def factor_panel(
    n_donors: int,
    days: int,
    rank: int,
    seed: int = 0,
    start: date = date(2020, 3, 1),
    target_weights: np.ndarray | None = None,
) -> tuple[Panel, np.ndarray]:
    """Noiseless rank-``rank`` panel plus one target row inside the donor span.

    Donor rows are ``loadings @ factors`` with smooth positive time factors.
    The last row (unit ``target``) is ``target_weights @ donors``; the weights
    are returned.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(days) / days
    factors = np.vstack(
        [np.ones(days)]
        + [1.0 + np.sin(2 * np.pi * (j + 1) * t + rng.uniform(0, 2 * np.pi)) * 0.5 for j in range(rank - 1)]
    )[:rank]
    loadings = rng.uniform(0.5, 2.0, size=(n_donors, rank))
    donors = loadings @ factors * 100.0
    if target_weights is None:
        target_weights = rng.dirichlet(np.ones(n_donors))
    target = np.asarray(target_weights) @ donors
    units = [f"d{i:02d}" for i in range(n_donors)] + ["target"]
    meta = {u: UnitMeta(population=1_000_000, region="donor" if u != "target" else "target",
                        measure_dates=(start,)) for u in units}
    dates = [start + timedelta(days=d) for d in range(days)]
    return Panel(units, dates, np.vstack([donors, target]), "value", meta), np.asarray(target_weights)


def mobility_panel(
    n_units: int,
    days: int = 90,
    seed: int = 0,
    regimes: Mapping[str, tuple[float, float]] | None = None,
    lockdown_day: int = 14,
    noise: float = 3.0,
    start: date = date(2020, 3, 1),
) -> tuple[Panel, dict[str, str]]:
    """Percent-change-from-baseline mobility with one trend per regime.

    Each regime is ``(depth, recovery_per_day)``: mobility drops to ``-depth``
    on ``lockdown_day`` and then climbs back towards 0 at the given rate.
    A weekend dip of 8 points and Gaussian noise are added.
    """
    if regimes is None:
        regimes = {"reopen-fast": (45.0, 1.2), "stay-low": (45.0, 0.1)}
    rng = np.random.default_rng(seed)
    names = list(regimes)
    t = np.arange(days)
    weekend = np.where(t % 7 >= 5, -8.0, 0.0)
    rows, labels, units = [], {}, []
    for i in range(n_units):
        regime = names[i * len(names) // n_units]
        depth, rate = regimes[regime]
        depth *= 1 + rng.uniform(-0.1, 0.1)
        trend = np.where(t < lockdown_day, 0.0, np.minimum(0.0, -depth + rate * (t - lockdown_day)))
        rows.append(trend + weekend + noise * rng.standard_normal(days))
        unit = f"{regime}-{i:02d}"
        units.append(unit)
        labels[unit] = regime
    dates = [start + timedelta(days=d) for d in range(days)]
    return Panel(units, dates, np.vstack(rows), "mobility-pct"), labels
