"""Regenerate the bundled CSV fixtures under src/synthctl/fixtures/.

Run from the repository root:  python tools/make_fixtures.py
Output is deterministic; rerunning rewrites identical files.
"""

import csv
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from synthctl.epi import SirConfig, simulate

OUT = Path(__file__).resolve().parents[1] / "src" / "synthctl" / "fixtures"


def write_wide(path, units, start, rows, fmt):
    days = len(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["unit"] + [(start + timedelta(days=d)).isoformat() for d in range(days)])
        for unit, row in zip(units, rows):
            w.writerow([unit] + ["" if np.isnan(v) else fmt(v) for v in row])


def eu_deaths():
    rng = np.random.default_rng(2020)
    start = date(2020, 2, 15)
    days = 120
    countries = [
        ("Italy", 60_360_000, 24, "2020-03-09;2020-03-11;2020-03-22"),
        ("Spain", 47_100_000, 29, "2020-03-14;2020-03-30"),
        ("France", 67_060_000, 31, "2020-03-17"),
        ("Belgium", 11_490_000, 32, "2020-03-13;2020-03-18"),
        ("Netherlands", 17_280_000, 33, "2020-03-15;2020-03-23"),
        ("Germany", 83_020_000, 36, "2020-03-22"),
        ("Switzerland", 8_570_000, 30, "2020-03-16"),
        ("Portugal", 10_280_000, 37, "2020-03-19"),
        ("Austria", 8_860_000, 30, "2020-03-16"),
        ("Ireland", 4_900_000, 41, ""),
    ]
    rows, meta = [], []
    for name, pop, t0, dates in countries:
        seeds = pop * 2e-6 * rng.uniform(0.5, 2.0)
        beta0 = 0.3 * rng.uniform(0.9, 1.1)
        cfg = SirConfig(population=pop, beta0=beta0, beta_lockdown=0.07, gamma=0.1,
                        ifr=0.008, seed_infected=seeds, t0=t0, noise_sigma=0.15)
        if name == "Portugal":
            cfg = SirConfig(population=pop, beta0=0.22, beta_lockdown=0.07, gamma=0.1,
                            ifr=0.002, seed_infected=2.0, t0=t0, noise_sigma=0.15)
        run = simulate(cfg, days, seed=int(rng.integers(2**31)))
        cum = np.round(np.cumsum(run.deaths))
        rows.append(cum)
        meta.append((name, pop, "Western-Europe", dates))
    rows = np.array(rows)
    # reporting gaps
    rows[1, 70] = np.nan
    rows[4, 100] = np.nan
    rows[7, 5] = np.nan
    write_wide(OUT / "eu_deaths.csv", [c[0] for c in countries], start, rows, lambda v: f"{int(v)}")
    with open(OUT / "eu_meta.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["unit", "population", "region", "intervention_date"])
        w.writerows(meta)


def sweden_mobility():
    rng = np.random.default_rng(46)
    start = date(2020, 2, 15)
    days = 120
    t = np.arange(days)
    weekend = np.where((t + 5) % 7 >= 5, -12.0, 0.0)
    counties = [
        ("Stockholm", 25, 6, 42.0, 0.10),
        ("Vastra Gotaland", 27, 8, 35.0, 0.12),
        ("Skane", 28, 10, 30.0, 0.15),
        ("Uppsala", 26, 7, 38.0, 0.10),
        ("Norrbotten", 30, 12, 14.0, 0.05),
    ]
    rows = []
    for _, onset, ramp, depth, rec in counties:
        decline = np.clip((t - onset) / ramp, 0, 1) * depth
        recovery = np.clip(t - onset - ramp - 20, 0, None) * rec
        trend = -(decline - recovery).clip(0, None)
        rows.append(np.round(trend + weekend + 2.5 * rng.standard_normal(days)))
    rows = np.array(rows)
    rows[0, 60] = np.nan
    rows[2, 33] = np.nan
    write_wide(OUT / "sweden_mobility.csv", [c[0] for c in counties], start, rows,
               lambda v: f"{int(v)}")


def table1():
    rng = np.random.default_rng(525)
    start = date(2020, 5, 25)
    days = 60
    t = np.arange(days)
    groups = [
        # (base temperature F, daily cases/M, daily deaths/M, states)
        (60.0, 80.0, 1.4, ["Maine", "Vermont", "New Hampshire", "Montana"]),
        (76.0, 170.0, 3.8, ["Florida", "Texas", "Arizona", "Louisiana"]),
        (66.0, 125.0, 3.7, ["Ohio", "Indiana", "Illinois", "Missouri"]),
        (70.0, 115.0, 4.1, ["Virginia", "Kentucky", "Tennessee", "Kansas"]),
    ]
    units, temp, cases, deaths = [], [], [], []
    for base_t, c, d, states in groups:
        for s in states:
            units.append(s)
            temp.append(np.round(base_t + 6 * t / days + rng.normal(0, 3, days) + rng.uniform(-2, 2), 1))
            growth = np.exp(rng.uniform(-0.5, 1.0) * t / days)
            cases.append(np.round(c * growth * rng.lognormal(0, 0.2, days), 2))
            deaths.append(np.round(d * growth * rng.lognormal(0, 0.3, days), 3))
    cases = np.array(cases)
    cases[5, 12] = np.nan
    write_wide(OUT / "us_temperature.csv", units, start, temp, lambda v: f"{v:.1f}")
    write_wide(OUT / "us_daily_cases_pm.csv", units, start, cases, lambda v: f"{v:.2f}")
    write_wide(OUT / "us_daily_deaths_pm.csv", units, start, deaths, lambda v: f"{v:.3f}")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    eu_deaths()
    sweden_mobility()
    table1()
