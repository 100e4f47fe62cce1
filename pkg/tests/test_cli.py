import csv
import hashlib
import json
import shutil
import subprocess
import sys

from synthctl import __version__
from synthctl.cli import main
from synthctl.fixtures import fixture_path

EU = str(fixture_path("eu_deaths.csv"))
EU_META = str(fixture_path("eu_meta.csv"))


def read_csv(path):
    with open(path, newline="") as fh:
        first = fh.readline()
        return first, list(csv.DictReader(fh))


def run_ok(*argv):
    assert main([str(a) for a in argv]) == 0


def gen_factor(tmp_path):
    out = tmp_path / "gen"
    run_ok("synth-gen", "--kind", "factor", "--units", 21, "--days", 150, "--rank", 3,
           "--seed", 4, "--out-dir", out, "--out", "factor.csv")
    return out


# exit codes

def test_help_exits_zero(capsys):
    assert main(["fit", "--help"]) == 0
    assert "--target" in capsys.readouterr().out


def test_unknown_flag_is_usage_error(capsys):
    assert main(["align", "--input", EU, "--metric", "cumulative-deaths", "--bogus"]) == 2


def test_missing_required_flag_is_usage_error(capsys):
    assert main(["align", "--metric", "cumulative-deaths"]) == 2


def test_missing_target_is_usage_error(tmp_path, capsys):
    assert main(["fit", "--input", EU, "--metric", "cumulative-deaths", "--out-dir", str(tmp_path)]) == 2


def test_data_error_prints_one_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("unit,2020-01-01,2020-01-02\nA,1,oops\n")
    code = main(["ingest", "--input", str(bad), "--metric", "cumulative-cases", "--out-dir", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 1
    assert err.count("\n") == 1 and err.startswith("synthctl: error: ")


def test_missing_input_file(tmp_path, capsys):
    code = main(["ingest", "--input", str(tmp_path / "nope.csv"), "--metric", "value",
                 "--out-dir", str(tmp_path)])
    assert code == 1


# outputs

def test_ingest_outputs_and_manifest(tmp_path):
    run_ok("ingest", "--input", EU, "--metric", "cumulative-deaths", "--meta", EU_META, "--out-dir", tmp_path)
    first, rows = read_csv(tmp_path / "report.csv")
    assert first == f"# synthctl {__version__} ingest\n"
    assert {r["unit"] for r in rows} >= {"Italy", "Portugal"}
    assert (tmp_path / "panel.csv").read_text().startswith(f"# synthctl {__version__} ingest\n")
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["subcommand"] == "ingest" and m["version"] == __version__
    assert m["inputs"][EU] == hashlib.sha256(open(EU, "rb").read()).hexdigest()
    assert sorted(m["outputs"]) == sorted(str(tmp_path / n) for n in ("panel.csv", "report.csv"))
    assert m["config"]["metric"] == "cumulative-deaths"
    assert m["config"]["seed"] == 0


def test_align_writes_offsets_and_split(tmp_path):
    run_ok("align", "--input", EU, "--metric", "cumulative-deaths", "--threshold", 100, "--out-dir", tmp_path)
    _, offsets = read_csv(tmp_path / "offsets.csv")
    assert {r["unit"]: r["t0_date"] for r in offsets}["Italy"] == "2020-03-29"
    _, excluded = read_csv(tmp_path / "excluded.csv")
    assert [r["unit"] for r in excluded] == ["Portugal"]
    _, split = read_csv(tmp_path / "split.csv")
    assert {r["role"] for r in split} <= {"donor", "target", "unused"}


def test_rerun_is_byte_identical(tmp_path):
    argv = ["cluster", "--input", str(fixture_path("us_temperature.csv")), "--metric", "temperature",
            "--k", 3, "--restarts", 2, "--stat-window", "0:60", "--out-dir", tmp_path]
    run_ok(*argv)
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    run_ok(*argv)
    assert {p.name: p.read_bytes() for p in tmp_path.iterdir()} == first


def test_seed_falls_back_to_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SYNTHCTL_SEED", "17")
    run_ok("synth-gen", "--units", 4, "--days", 30, "--out-dir", tmp_path)
    assert json.loads((tmp_path / "manifest.json").read_text())["config"]["seed"] == 17
    run_ok("synth-gen", "--units", 4, "--days", 30, "--seed", 3, "--out-dir", tmp_path)
    assert json.loads((tmp_path / "manifest.json").read_text())["config"]["seed"] == 3


def test_config_file_supplies_flags_and_flags_win(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"input": EU, "metric": "cumulative-deaths", "threshold": 1000}))
    run_ok("align", "--config", cfg, "--out-dir", tmp_path / "a")
    _, rows = read_csv(tmp_path / "a" / "offsets.csv")
    assert sorted(r["unit"] for r in rows) == ["France", "Germany"]
    run_ok("align", "--config", cfg, "--threshold", 100, "--out-dir", tmp_path / "b")
    _, rows = read_csv(tmp_path / "b" / "offsets.csv")
    assert len(rows) == 9


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"input": EU, "metric": "cumulative-deaths", "colour": "red"}))
    assert main(["align", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2


def test_config_values_respect_choices(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"input": EU, "metric": "cumulative-deaths", "rule": "sideways"}))
    assert main(["align", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2


# pipelines

def test_factor_pipeline_recovers_target(tmp_path):
    gen = gen_factor(tmp_path)
    panel, meta = gen / "factor.csv", gen / "factor_meta.csv"
    common = ["--input", panel, "--meta", meta, "--metric", "value", "--rule", "intervention"]
    run_ok("align", *common, "--out-dir", tmp_path / "align")
    run_ok("fit", *common, "--target", "target", "--donor-region", "donor", "--train-days", 30,
           "--rank", 3, "--horizon", 120, "--out-dir", tmp_path / "fit")
    model = json.loads((tmp_path / "fit" / "model.json").read_text())
    assert model["target_id"] == "target" and model["window"] == [0, 120]
    run_ok("predict", *common, "--model", tmp_path / "fit" / "model.json", "--out-dir", tmp_path / "pred")
    _, rows = read_csv(tmp_path / "pred" / "trajectory.csv")
    post = [r for r in rows if int(r["rel_day"]) >= 30]
    assert len(post) == 90
    for r in post:
        a, c = float(r["actual"]), float(r["counterfactual"])
        assert abs(c - a) / abs(a) < 1e-6


def test_sir_pipeline_smoke(tmp_path):
    run_ok("synth-gen", "--units", 24, "--days", 150, "--seed", 1, "--noise", 0.05, "--out-dir", tmp_path)
    panel, meta = tmp_path / "panel.csv", tmp_path / "panel_meta.csv"
    common = ["--input", panel, "--meta", meta, "--metric", "cumulative-cases"]
    run_ok("counterfactual", *common, "--target", "loose-12", "--donor-region", "loose",
           "--shift-days", -5, "--out-dir", tmp_path / "cf")
    _, summary = read_csv(tmp_path / "cf" / "summary.csv")
    assert summary
    run_ok("gap", "--trajectory", tmp_path / "cf" / "trajectory.csv", "--window", "0:30",
           "--out-dir", tmp_path / "gap")
    run_ok("impact", *common, "--rule", "intervention", "--out-dir", tmp_path / "impact")
    _, peaks = read_csv(tmp_path / "impact" / "impact.csv")
    assert len(peaks) == 24


def test_si_compare_output_independent_of_jobs(tmp_path):
    run_ok("synth-gen", "--units", 40, "--days", 130, "--seed", 2, "--noise", 0.05, "--out-dir", tmp_path)
    common = ["si-compare", "--input", tmp_path / "panel.csv", "--meta", tmp_path / "panel_meta.csv",
              "--metric", "cumulative-cases", "--donor-region", "strict", "--reference-date", "2020-05-30",
              "--bins", "0,5000,50000", "--rank", 2]
    run_ok(*common, "--jobs", 1, "--out-dir", tmp_path / "j1")
    run_ok(*common, "--jobs", 4, "--out-dir", tmp_path / "j4")
    for name in ("si_compare.csv", "si_targets.csv", "si_failed.csv"):
        assert (tmp_path / "j1" / name).read_bytes() == (tmp_path / "j4" / name).read_bytes()


def test_console_script_runs(tmp_path):
    exe = shutil.which("synthctl")
    cmd = [exe] if exe else [sys.executable, "-m", "synthctl.cli"]
    proc = subprocess.run([*cmd, "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == f"synthctl {__version__}"
