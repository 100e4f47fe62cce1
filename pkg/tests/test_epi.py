import numpy as np
import pytest

from synthctl.epi import PRESET_REGIMES, SirConfig, factor_panel, generate_panel, mobility_panel, simulate
from synthctl.errors import InvalidParameter, StabilityError

G = 1 / 14
REF = SirConfig(population=1_000_000, beta0=2.5 * G, beta_lockdown=0.8 * G, gamma=G,
                seed_infected=10_000, t0=60)


def test_no_transmission_means_no_cases():
    run = simulate(SirConfig(beta0=0.0, beta_lockdown=0.0), 50)
    assert not run.cases.any() and not run.deaths.any()
    assert run.infected[-1] < run.infected[0]


def test_equal_rates_make_intervention_day_irrelevant():
    a = simulate(SirConfig(beta0=0.2, beta_lockdown=0.2, t0=10), 100)
    b = simulate(SirConfig(beta0=0.2, beta_lockdown=0.2, t0=70), 100)
    assert np.array_equal(a.cases, b.cases)


def test_lockdown_bends_the_curve():
    free = simulate(SirConfig(beta_lockdown=0.25), 150)
    locked = simulate(SirConfig(), 150)
    assert locked.cumulative_cases[-1] < free.cumulative_cases[-1]
    assert np.array_equal(locked.cases[:30], free.cases[:30])


def test_population_conserved_every_step():
    run = simulate(REF, 200)
    total = run.susceptible + run.infected + run.recovered
    assert np.max(np.abs(total - REF.population)) <= 1e-9 * REF.population
    assert run.max_conservation_error <= 1e-9 * REF.population


def test_cases_are_susceptible_losses():
    run = simulate(REF, 120)
    assert np.allclose(run.true_cases, -np.diff(run.susceptible))
    assert np.all(run.true_cases >= 0)


def test_daily_step_tracks_fine_step():
    coarse = simulate(REF, 200).true_cases
    fine = simulate(REF, 200, dt=0.01).true_cases
    assert abs(int(coarse.argmax()) - int(fine.argmax())) <= 2
    assert abs(coarse.max() / fine.max() - 1) <= 0.05


def test_deaths_are_lagged_fraction_of_cases():
    cfg = SirConfig(report_lag=21, ifr=0.02)
    run = simulate(cfg, 100)
    assert np.allclose(run.deaths[21:], 0.02 * run.true_cases[:79])
    assert not run.deaths[:21].any()


def test_noise_has_unit_mean():
    cfg = SirConfig(beta0=0.1, beta_lockdown=0.1, noise_sigma=0.3)
    ratios = np.concatenate([
        simulate(cfg, 100, seed=s).cases / simulate(cfg, 100, seed=s).true_cases for s in range(50)
    ])
    assert ratios.mean() == pytest.approx(1.0, abs=0.01)
    assert np.all(ratios > 0)


def test_same_seed_same_noise():
    cfg = SirConfig(noise_sigma=0.2)
    assert np.array_equal(simulate(cfg, 60, seed=4).cases, simulate(cfg, 60, seed=4).cases)
    assert not np.array_equal(simulate(cfg, 60, seed=4).cases, simulate(cfg, 60, seed=5).cases)


@pytest.mark.parametrize("kwargs", [dict(beta0=60.0, beta_lockdown=0.1), dict(gamma=2.0)])
def test_unstable_step_rejected(kwargs):
    with pytest.raises(StabilityError):
        simulate(SirConfig(**kwargs), 10)


@pytest.mark.parametrize("kwargs", [
    dict(gamma=0.0), dict(beta_lockdown=0.3), dict(ifr=1.0), dict(population=0), dict(noise_sigma=-1),
])
def test_invalid_config(kwargs):
    with pytest.raises(InvalidParameter):
        SirConfig(**kwargs)


def test_dt_must_divide_a_day():
    with pytest.raises(InvalidParameter):
        simulate(SirConfig(), 10, dt=0.3)


# panel generator

def test_zero_jitter_gives_identical_rows():
    sp = generate_panel(6, {"r": SirConfig()}, jitter=0.0, seed=1)
    assert all(np.array_equal(sp.cases.values[0], r) for r in sp.cases.values)


def test_regimes_separate_by_day_ninety():
    sp = generate_panel(20, {"strict": PRESET_REGIMES["strict"], "loose": PRESET_REGIMES["loose"]},
                        jitter=0.05, seed=0, days=120)
    strict = np.mean([sp.cases.row(u)[90] for u in sp.units_in("strict")])
    loose = np.mean([sp.cases.row(u)[90] for u in sp.units_in("loose")])
    assert loose >= 2 * strict


def test_generated_series_are_cumulative():
    sp = generate_panel(10, PRESET_REGIMES, seed=3)
    assert np.all(np.diff(sp.cases.values, axis=1) >= 0)
    assert np.all(np.diff(sp.deaths.values, axis=1) >= 0)
    assert sp.cases.is_cumulative


def test_generator_is_deterministic():
    a = generate_panel(8, PRESET_REGIMES, seed=7, t0_jitter=5)
    b = generate_panel(8, PRESET_REGIMES, seed=7, t0_jitter=5)
    assert a.cases.values.tobytes() == b.cases.values.tobytes()
    assert a.configs == b.configs


def test_labels_and_metadata():
    sp = generate_panel(9, PRESET_REGIMES, seed=0, t0_jitter=3)
    assert [sp.labels[u] for u in sp.cases.units] == ["strict"] * 3 + ["loose"] * 3 + ["none"] * 3
    for u in sp.cases.units:
        cfg = sp.configs[u]
        assert sp.cases.meta[u].population == cfg.population
        assert sp.cases.date_index(sp.cases.meta[u].intervention_date) == cfg.t0
        assert abs(cfg.t0 - 40) <= 3


def test_jitter_keys_checked():
    with pytest.raises(InvalidParameter):
        generate_panel(4, PRESET_REGIMES, jitter={"ifr": 0.1})
    with pytest.raises(InvalidParameter):
        generate_panel(4, PRESET_REGIMES, jitter=1.0)


def test_factor_panel_target_in_span():
    p, w = factor_panel(10, 50, 3, seed=2)
    assert np.allclose(w @ p.values[:-1], p.row("target"))
    assert np.linalg.matrix_rank(p.values[:-1]) == 3


def test_mobility_panel_labels():
    p, labels = mobility_panel(6, seed=0)
    assert list(labels) == list(p.units)
    assert sorted(set(labels.values())) == ["reopen-fast", "stay-low"]
