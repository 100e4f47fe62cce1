# %% [markdown]
# # Comparing regimes
#
# Counties under a loose regime are predicted from donors under a strict one
# and from donors under their own regime. Stage matching keeps donors whose
# cases per million on the reference date are within half of the target's.

# %%
from synthctl.epi import SirConfig, generate_panel
from synthctl.synthint import StageFilter, compare_regions

g = 0.1
base = dict(population=1_000_000, beta0=1.5 * g, gamma=g, ifr=0.01, seed_infected=20, t0=90,
            noise_sigma=0.05)
regimes = {"strict": SirConfig(beta_lockdown=0.8 * g, **base),
           "loose": SirConfig(beta_lockdown=1.3 * g, **base)}
jitter = {"beta0": 0.05, "beta_lockdown": 0.05, "gamma": 0.05, "seed_infected": 0.75, "population": 0.5}
sp = generate_panel(100, regimes, jitter=jitter, seed=0, days=180)
cases = sp.cases
res = compare_regions(list(cases.units), sp.units_in("strict"), cases, StageFilter(cases.dates[90]),
                      [2000, 4000, 6000, 8000], rank=3)

# %% [markdown]
# Mean NMSE per density bin. Loose counties predicted from strict donors
# miss by far more than strict counties predicted from their peers.

# %%
def fmt(v):
    return "-" if v is None else f"{v:.2e}"


print(f"{'bin':>13}  {'n in':>4}  {'NMSE in':>9}  {'n out':>5}  {'NMSE out':>9}")
for r in res.rows:
    print(f"{r.bin_low:6.0f}-{r.bin_high:<6.0f}  {r.count_in:4d}  {fmt(r.mean_nmse_in):>9}  "
          f"{r.count_out:5d}  {fmt(r.mean_nmse_out):>9}")
print(f"outside every bin: {len(res.out_of_range)}, no donors: {len(res.failed)}")

# %% [markdown]
# ## Clustering by temperature
#
# The bundled US fixture: cluster states on their temperature trend, then
# average temperature, daily cases and daily deaths per cluster over the
# first 60 days.

# %%
from synthctl.fixtures import fixture_path
from synthctl.panel import ingest_csv
from synthctl.trendcluster import cluster_aggregates, kmeans_trends

files = {"temperature": "us_temperature.csv", "cases": "us_daily_cases_pm.csv",
         "deaths": "us_daily_deaths_pm.csv"}
panels = {k: ingest_csv(fixture_path(f), "wide", k) for k, f in files.items()}
clusters = kmeans_trends(panels["temperature"], k=4, seed=0, restarts=5)
for agg in cluster_aggregates(panels["temperature"], clusters, stat_window=(0, 60), stats=panels):
    s = agg.scalar_stats
    print(f"{agg.label}: {s['temperature']:5.1f}F  {s['cases']:6.1f} cases/M  {s['deaths']:4.2f} deaths/M  "
          f"{', '.join(agg.members)}")
