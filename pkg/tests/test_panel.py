import math
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthctl.errors import (
    DuplicateError,
    EmptyInputError,
    InvalidParameter,
    MetadataError,
    MetricError,
    ParseError,
)
from synthctl.fixtures import fixture_path
from synthctl.panel import (
    Panel,
    UnitMeta,
    ingest_csv,
    make_panel,
    moving_average,
    negative_increments,
    per_million,
    read_metadata,
    to_cumulative,
    to_daily,
    write_metadata,
)
from conftest import read_wide_plain

D0 = date(2020, 3, 1)


def wide_text(units, values, start=D0):
    header = "unit," + ",".join((start + timedelta(days=i)).isoformat() for i in range(len(values[0])))
    lines = [header] + [u + "," + ",".join("" if v is None else str(v) for v in row)
                        for u, row in zip(units, values)]
    return "\n".join(lines) + "\n"


def long_text(units, values, start=D0, skip=()):
    lines = ["unit,date,value"]
    for u, row in zip(units, values):
        for i, v in enumerate(row):
            if (u, i) in skip:
                continue
            lines.append(f"{u},{(start + timedelta(days=i)).isoformat()},{'' if v is None else v}")
    return "\n".join(lines) + "\n"


# ingest

def test_wide_three_units_fully_observed(tmp_path):
    f = tmp_path / "w.csv"
    f.write_text(wide_text(["a", "b", "c"], [[float(i + j) for i in range(10)] for j in range(3)]))
    p = ingest_csv(f, "wide", "cumulative-cases")
    assert (p.n_units, p.n_dates) == (3, 10)
    assert p.mask.observed_fraction == 1.0


def test_long_with_one_missing_cell(tmp_path):
    f = tmp_path / "l.csv"
    vals = [[float(i) for i in range(10)] for _ in range(3)]
    f.write_text(long_text(["a", "b", "c"], vals, skip={("b", 4)}))
    p = ingest_csv(f, "long", "cumulative-cases")
    assert p.values.shape == (3, 10)
    assert math.isnan(p.values[1, 4])
    assert p.mask.observed_fraction == pytest.approx(29 / 30, abs=0)


def test_fixture_row_sums_match_spreadsheet_oracle(eu_deaths):
    # computed once with awk over the raw file, skipping empty cells
    expected = {
        "Italy": 21214, "Spain": 39748, "France": 113182, "Belgium": 18197,
        "Netherlands": 51584, "Germany": 518162, "Switzerland": 7092,
        "Portugal": 61, "Austria": 8606, "Ireland": 40899,
    }
    assert eu_deaths.n_units == 10 and eu_deaths.n_dates == 120
    got = {u: np.nansum(eu_deaths.row(u)) for u in eu_deaths.units}
    assert got == expected


def test_calendar_gap_becomes_missing_column(tmp_path):
    f = tmp_path / "gap.csv"
    f.write_text("unit,date,value\na,2020-03-01,1\na,2020-03-04,5\nb,2020-03-02,2\n")
    p = ingest_csv(f, "long", "value")
    assert p.n_dates == 4
    assert np.isnan(p.row("a")[1:3]).all()


def test_comment_and_blank_lines_are_skipped(tmp_path):
    f = tmp_path / "c.csv"
    f.write_text("# provenance line\n\n" + wide_text(["a"], [[1.0, 2.0]]))
    assert ingest_csv(f).n_dates == 2


def test_malformed_date_reports_row(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("unit,date,value\na,2020-03-01,1\na,2020-03-02,2\na,03/03/2020,3\n")
    with pytest.raises(ParseError) as exc:
        ingest_csv(f, "long")
    assert exc.value.row == 4


def test_malformed_value_reports_row(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("unit,2020-03-01,2020-03-02\na,1,2\nb,x,3\n")
    with pytest.raises(ParseError) as exc:
        ingest_csv(f)
    assert exc.value.row == 3


def test_duplicate_cell_is_an_error(tmp_path):
    f = tmp_path / "dup.csv"
    f.write_text("unit,date,value\na,2020-03-01,1\na,2020-03-01,2\n")
    with pytest.raises(DuplicateError):
        ingest_csv(f, "long")


def test_duplicate_unit_row_in_wide_file(tmp_path):
    f = tmp_path / "dup.csv"
    f.write_text("unit,2020-03-01\na,1\na,2\n")
    with pytest.raises(DuplicateError):
        ingest_csv(f)


@pytest.mark.parametrize("text", ["", "# only a comment\n", "unit,2020-03-01\n"])
def test_empty_input(tmp_path, text):
    f = tmp_path / "e.csv"
    f.write_text(text)
    with pytest.raises(EmptyInputError):
        ingest_csv(f)


def test_unknown_schema(tmp_path):
    f = tmp_path / "x.csv"
    f.write_text(wide_text(["a"], [[1.0]]))
    with pytest.raises(InvalidParameter):
        ingest_csv(f, "tall")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.one_of(st.none(), st.integers(0, 10_000)), min_size=3, max_size=3),
                min_size=1, max_size=4))
def test_wide_and_long_ingest_agree(tmp_path_factory, rows):
    d = tmp_path_factory.mktemp("wl")
    units = [f"u{i}" for i in range(len(rows))]
    (d / "w.csv").write_text(wide_text(units, rows))
    (d / "l.csv").write_text(long_text(units, rows))
    assert ingest_csv(d / "w.csv", "wide", "m") == ingest_csv(d / "l.csv", "long", "m")


# panel invariants

def test_panel_rejects_non_contiguous_dates():
    with pytest.raises(InvalidParameter):
        Panel(["a"], [D0, D0 + timedelta(days=2)], [[1.0, 2.0]], "value")


def test_panel_rejects_shape_mismatch():
    with pytest.raises(InvalidParameter):
        Panel(["a", "b"], [D0], [[1.0]], "value")


def test_panel_values_are_read_only():
    p = make_panel([[1.0, 2.0]])
    with pytest.raises(ValueError):
        p.values[0, 0] = 5.0


def test_monotonicity_violations_are_flagged_not_fixed():
    p = make_panel([[0, 5, 4, 4, 9]], metric="cumulative-cases")
    v = p.monotonicity_violations()
    assert v == [("u0", date(2020, 1, 3), 5.0, 4.0)]
    assert p.values[0, 2] == 4.0


def test_non_cumulative_metric_has_no_monotonicity_check():
    assert make_panel([[3, 1]], metric="daily-cases").monotonicity_violations() == []


def test_population_must_be_positive():
    with pytest.raises(MetadataError):
        UnitMeta(population=0)


def test_latest_measure_date_is_the_intervention_date(tmp_path):
    f = tmp_path / "m.csv"
    f.write_text("unit,population,region,intervention_date\n"
                 "a,100,X,2020-03-30;2020-04-04;2020-04-07\nb,200,,\n")
    meta = read_metadata(f)
    assert meta["a"].intervention_date == date(2020, 4, 7)
    assert meta["b"].intervention_date is None and meta["b"].region is None
    out = tmp_path / "m2.csv"
    write_metadata(meta, out)
    assert read_metadata(out) == meta


def test_override_date_wins():
    m = UnitMeta(measure_dates=(date(2020, 3, 1), date(2020, 3, 9)), override_date=date(2020, 3, 2))
    assert m.intervention_date == date(2020, 3, 2)


def test_wide_csv_round_trip(tmp_path, eu_deaths):
    out = tmp_path / "rt.csv"
    eu_deaths.to_wide_csv(out, comment="round trip")
    back = ingest_csv(out, "wide", eu_deaths.metric, eu_deaths.meta)
    assert back == eu_deaths


# moving average

def test_window_one_is_identity(eu_deaths):
    assert moving_average(eu_deaths, 1) == eu_deaths


def test_seven_day_mean_of_arithmetic_row():
    p = make_panel([[0, 7, 14, 21, 28, 35, 42]])
    assert moving_average(p, 7).values[0, -1] == 21.0


def test_prefix_uses_available_values():
    p = make_panel([[2, 4, 6, 8]])
    np.testing.assert_array_equal(moving_average(p, 3).values[0], [2, 3, 4, 6])


def test_missing_cells_stay_missing():
    p = make_panel([[1, np.nan, 3, 5]])
    out = moving_average(p, 2).values[0]
    assert np.isnan(out[1])
    np.testing.assert_array_equal(out[[0, 2, 3]], [1, 3, 4])


def test_zero_window_rejected():
    with pytest.raises(InvalidParameter):
        moving_average(make_panel([[1.0]]), 0)


def test_fixture_moving_average_matches_loop_oracle():
    dates, rows = read_wide_plain("eu_deaths.csv")
    p = moving_average(ingest_csv(fixture_path("eu_deaths.csv"), metric="cumulative-deaths"), 7)
    for unit, row in rows.items():
        for t, v in enumerate(row):
            got = p.row(unit)[t]
            if v is None:
                assert math.isnan(got)
                continue
            window = [x for x in row[max(0, t - 6): t + 1] if x is not None]
            assert abs(got - sum(window) / len(window)) <= 1e-12


def test_moving_average_idempotent_on_constant_rows():
    p = make_panel([[4.0] * 12, [-1.5] * 12])
    once = moving_average(p, 7)
    assert once == p
    assert moving_average(once, 7) == once


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=30),
       st.integers(1, 5_000_000), st.integers(1, 10))
def test_moving_average_commutes_with_per_million(row, pop, window):
    p = make_panel([row], meta={"u0": UnitMeta(population=pop)})
    a = moving_average(per_million(p), window).values
    b = per_million(moving_average(p, window)).values
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(a).max()))


# per million

def test_per_million_identity_population():
    p = make_panel([[500.0]], meta={"u0": UnitMeta(population=1_000_000)})
    assert per_million(p).values[0, 0] == 500.0


def test_per_million_ratio():
    p = make_panel([[50.0]], meta={"u0": UnitMeta(population=100_000)}, metric="cumulative-cases")
    out = per_million(p)
    assert out.values[0, 0] == 500.0
    assert out.metric == "cumulative-cases-per-million"


def test_per_million_names_the_unit_without_population():
    p = make_panel([[1.0], [2.0]], units=["a", "Nowhere"], meta={"a": UnitMeta(population=10)})
    with pytest.raises(MetadataError, match="Nowhere"):
        per_million(p)


def test_fixture_per_million_matches_recomputation(eu_deaths):
    _, rows = read_wide_plain("eu_deaths.csv")
    pops = {}
    with open(fixture_path("eu_meta.csv")) as fh:
        next(fh)
        for line in fh:
            unit, pop, *_ = line.strip().split(",")
            pops[unit] = int(pop)
    out = per_million(eu_deaths)
    for unit, row in rows.items():
        for t, v in enumerate(row):
            if v is not None:
                assert abs(out.row(unit)[t] - v * 1e6 / pops[unit]) <= 1e-9


# daily / cumulative

def test_to_daily_differences():
    p = make_panel([[0, 0, 3, 5, 5]], metric="cumulative-cases")
    d = to_daily(p)
    np.testing.assert_array_equal(d.values[0], [0, 0, 3, 2, 0])
    assert d.metric == "daily-cases"


def test_constant_row_gives_zeros_after_first():
    d = to_daily(make_panel([[7] * 6], metric="cumulative-deaths"))
    np.testing.assert_array_equal(d.values[0], [7, 0, 0, 0, 0, 0])


def test_to_daily_needs_cumulative_metric():
    with pytest.raises(MetricError):
        to_daily(make_panel([[1, 2]], metric="daily-cases"))


def test_negative_increments_are_kept_and_reported():
    d = to_daily(make_panel([[0, 10, 8, 12]], metric="cumulative-cases"))
    assert d.values[0, 2] == -2
    assert negative_increments(d) == [("u0", date(2020, 1, 3), -2.0)]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(0, 10_000), min_size=1, max_size=25), min_size=1, max_size=4)
       .filter(lambda rows: len({len(r) for r in rows}) == 1))
def test_daily_round_trip_is_exact(rows):
    cum = np.cumsum(np.asarray(rows, dtype=float), axis=1)
    p = make_panel(cum, metric="cumulative-cases")
    back = to_cumulative(to_daily(p))
    assert back == p
