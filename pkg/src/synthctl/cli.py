"""``synthctl`` command line: reproducible pipelines that write plot-ready CSV files.

Exit codes: 0 success, 1 data/model error (one line on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from dataclasses import replace
from datetime import date
from pathlib import Path

import numpy as np

from synthctl import __version__
from synthctl.align import (
    DEFAULT_DROP_PCT,
    DEFAULT_SUSTAIN_DAYS,
    DEFAULT_THRESHOLD,
    AlignmentRule,
    train_test_split,
)
from synthctl.epi import PRESET_REGIMES, factor_panel, generate_panel
from synthctl.errors import InvalidParameter, SynthctlError
from synthctl.impact import gap_summary, peak_analysis
from synthctl.panel import (
    Panel,
    ingest_csv,
    moving_average,
    negative_increments,
    per_million,
    read_metadata,
    to_daily,
    write_metadata,
)
from synthctl.rsc import (
    DEFAULT_ENERGY,
    DEFAULT_IMPUTE_ITER,
    RscModel,
    Trajectory,
    counterfactual_shifted_intervention,
    fit_aligned,
    normalized_weights,
    project,
)
from synthctl.synthint import BinSpec, StageFilter, compare_regions
from synthctl.trendcluster import cluster_aggregates, kmeans_trends

COMMANDS = (
    "ingest", "align", "fit", "predict", "counterfactual",
    "si-compare", "cluster", "impact", "gap", "synth-gen",
)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- outputs

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


class Run:
    """Collects output files and writes the manifest for one subcommand."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.args = args
        self.out_dir = Path(args.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []

    def input(self, path: str | None) -> str | None:
        if path:
            p = Path(path)
            if not p.exists():
                raise SynthctlError(f"input file not found: {path}")
            self.inputs[str(path)] = hashlib.sha256(p.read_bytes()).hexdigest()
        return path

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.outputs.append(str(p))
        return p

    def write_csv(self, name: str, header: list[str], rows) -> Path:
        p = self.path(name)
        with open(p, "w", newline="") as fh:
            fh.write(f"# synthctl {__version__} {self.command}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_cell(v) for v in row])
        return p

    def write_manifest(self) -> None:
        config = {
            k: v for k, v in sorted(vars(self.args).items())
            if k not in ("command", "handler", "config")
        }
        manifest = {
            "tool": "synthctl",
            "version": __version__,
            "subcommand": self.command,
            "config": config,
            "inputs": self.inputs,
            "outputs": self.outputs,
        }
        with open(self.out_dir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


# ---------------------------------------------------------------- helpers

def _window(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like a:b, got {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _names(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _iso(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}") from None


def _load_panel(run: Run, args) -> Panel:
    meta = read_metadata(run.input(args.meta)) if getattr(args, "meta", None) else {}
    p = ingest_csv(run.input(args.input), args.schema, args.metric, meta)
    if getattr(args, "daily", False):
        p = to_daily(p)
    if getattr(args, "per_million", False):
        p = per_million(p)
    smooth = getattr(args, "smooth", 1)
    if smooth and smooth > 1:
        p = moving_average(p, smooth)
    return p


def _rule(args) -> AlignmentRule:
    if args.rule == "threshold":
        return AlignmentRule("threshold", threshold=args.threshold, per_capita=args.per_capita)
    if args.rule == "intervention":
        return AlignmentRule("intervention")
    return AlignmentRule("mobility", drop_pct=args.drop_pct, sustain_days=args.sustain)


def _aligned(run: Run, args, p: Panel):
    mobility = None
    if args.rule == "mobility":
        if not args.mobility:
            raise UsageError("--rule mobility needs --mobility FILE")
        mobility = ingest_csv(run.input(args.mobility), args.schema, "mobility-pct")
    return _rule(args).apply(p, mobility)


def _donors(args, a, p: Panel) -> list[str]:
    if args.donors:
        donors = _names(args.donors)
    elif args.donor_region:
        donors = [u for u in a.units if p.meta.get(u) and p.meta[u].region == args.donor_region]
    else:
        donors = train_test_split(a, args.train_days, args.test_up_to).donors
    donors = [d for d in donors if d != args.target]
    missing = [d for d in donors if d not in a.offsets]
    if missing:
        raise SynthctlError(f"donors not aligned: {','.join(missing)}")
    if not donors:
        raise SynthctlError("empty donor set")
    return donors


def _write_trajectory(run: Run, t: Trajectory, name: str = "trajectory.csv") -> None:
    run.write_csv(name, ["rel_day", "actual", "counterfactual", "gap"], t.rows())


# ---------------------------------------------------------------- commands

def cmd_ingest(run: Run, args) -> None:
    p = _load_panel(run, args)
    run.path("panel.csv")
    p.to_wide_csv(run.out_dir / "panel.csv", comment=f"synthctl {__version__} ingest")
    observed = p.mask.observed
    violations = {}
    for unit, *_ in p.monotonicity_violations():
        violations[unit] = violations.get(unit, 0) + 1
    negatives = {}
    if not p.is_cumulative and p.metric.startswith("daily"):
        for unit, *_ in negative_increments(p):
            negatives[unit] = negatives.get(unit, 0) + 1
    run.write_csv(
        "report.csv",
        ["unit", "observed_fraction", "monotonicity_violations", "negative_increments"],
        [(u, float(observed[i].mean()), violations.get(u, 0), negatives.get(u, 0))
         for i, u in enumerate(p.units)],
    )


def cmd_align(run: Run, args) -> None:
    p = _load_panel(run, args)
    a = _aligned(run, args, p)
    run.write_csv(
        "offsets.csv", ["unit", "t0_date", "rel_days_available"],
        [(u, a.t0_date(u).isoformat(), a.days_available(u)) for u in a.units],
    )
    run.write_csv("excluded.csv", ["unit", "reason"], a.excluded)
    split = train_test_split(a, args.train_days, args.test_up_to)
    roles = {u: "donor" for u in split.donors} | {u: "target" for u in split.targets}
    run.write_csv("split.csv", ["unit", "role"],
                  [(u, roles.get(u, "unused")) for u in a.units])


def _fit_model(run: Run, args) -> tuple[RscModel, tuple[int, int], Panel]:
    if not args.target:
        raise UsageError(f"{run.command} needs --target")
    p = _load_panel(run, args)
    a = _aligned(run, args, p)
    if args.target not in a.offsets:
        raise SynthctlError(f"target {args.target!r} not aligned")
    donors = _donors(args, a, p)
    start = args.window_start
    stop = args.horizon if args.horizon is not None else max(a.days_available(d) for d in donors)
    model = fit_aligned(
        a, args.target, donors, args.train_days, start, stop, args.rank,
        energy=args.energy, ridge=args.ridge, impute_iter=args.impute_iter,
    )
    return model, (start, stop), p


def cmd_fit(run: Run, args) -> None:
    model, window, p = _fit_model(run, args)
    d = model.to_dict() | {"window": list(window), "metric": p.metric}
    with open(run.path("model.json"), "w") as fh:
        json.dump(d, fh, indent=2)
        fh.write("\n")
    nw = normalized_weights(model)
    run.write_csv("weights.csv", ["donor", "weight", "normalized_weight"],
                  zip(model.donor_ids, model.weights, nw))


def cmd_predict(run: Run, args) -> None:
    if args.model:
        with open(run.input(args.model)) as fh:
            d = json.load(fh)
        args.target = args.target or d["target_id"]
        p = _load_panel(run, args)
        a = _aligned(run, args, p)
        start, stop = d["window"]
        donors = a.matrix(d["donor_ids"], start, stop)
        model = RscModel.from_dict(d, donors=donors, target=a.series(args.target, start, stop))
    else:
        model, _, _ = _fit_model(run, args)
    _write_trajectory(run, project(model))


def cmd_counterfactual(run: Run, args) -> None:
    p = _load_panel(run, args)
    a = _aligned(run, args, p)
    if args.target not in a.offsets:
        raise SynthctlError(f"target {args.target!r} has no alignment date")
    donors = _donors(args, a, p)
    res = counterfactual_shifted_intervention(
        a, p.row(args.target), a.offsets[args.target], args.shift_days,
        args.pre_days, args.horizon, args.rank,
        donor_ids=donors, target_id=args.target, cumulative=p.is_cumulative,
        energy=args.energy, ridge=args.ridge, impute_iter=args.impute_iter,
    )
    _write_trajectory(run, res.trajectory)
    run.write_csv(
        "summary.csv",
        ["target", "shift_days", "actual_total", "counterfactual_total", "percent_reduction"],
        [(args.target, args.shift_days, res.actual_total, res.counterfactual_total,
          res.percent_reduction)],
    )
    run.write_csv("weights.csv", ["donor", "weight", "normalized_weight"],
                  zip(res.model.donor_ids, res.model.weights, normalized_weights(res.model)))


def cmd_si_compare(run: Run, args) -> None:
    p = _load_panel(run, args)
    region = [u for u in p.units if p.meta.get(u) and p.meta[u].region == args.donor_region]
    if not region:
        raise SynthctlError(f"no unit tagged {args.donor_region!r}")
    targets = _names(args.targets) if args.targets else list(p.units)
    res = compare_regions(
        targets, region, p, StageFilter(args.reference_date, args.tolerance), args.bins,
        args.rank, pre_days=args.pre_days, power=args.power, pooled=args.pooled, jobs=args.jobs,
    )
    run.write_csv(
        "si_compare.csv",
        ["bin_low", "bin_high", "mean_nmse_in", "mean_nmse_out", "count_in", "count_out"],
        [(r.bin_low, r.bin_high, r.mean_nmse_in, r.mean_nmse_out, r.count_in, r.count_out)
         for r in res.rows],
    )
    edges = BinSpec(tuple(args.bins)).bins
    run.write_csv(
        "si_targets.csv",
        ["unit", "in_donor_region", "cases_per_million", "bin_low", "donor_count", "nmse"],
        [(c.target_id, c.in_donor_region, c.stage,
          None if c.bin is None else edges[c.bin][0], c.donor_count, c.nmse)
         for c in res.comparisons],
    )
    run.write_csv("si_failed.csv", ["unit", "reason"], res.failed)


def cmd_cluster(run: Run, args) -> None:
    p = _load_panel(run, args)
    c = kmeans_trends(p, args.window, args.k, args.seed, args.restarts, args.normalize)
    # units with gaps in the window get an empty cluster cell
    rows = sorted(c.assignment.items()) + [(u, None) for u in sorted(c.excluded)]
    run.write_csv("clusters.csv", ["unit", "cluster"], rows)
    stats = {}
    for item in args.stat or []:
        name, _, path = item.partition("=")
        if not path:
            raise UsageError(f"--stat expects NAME=FILE, got {item!r}")
        stats[name] = ingest_csv(run.input(path), args.schema, name)
    aggs = cluster_aggregates(p, c, args.stat_window, stats or None)
    rows = []
    for agg in aggs:
        j = int(agg.label.split()[-1])
        rows.extend((j, day, v) for day, v in enumerate(agg.mean_series))
    run.write_csv("cluster_means.csv", ["cluster", "day", "mean_value"], rows)
    names = list(aggs[0].scalar_stats) if aggs else []
    run.write_csv(
        "cluster_stats.csv", ["cluster", "members", *names],
        [(int(g.label.split()[-1]), g.member_count, *[g.scalar_stats[n] for n in names])
         for g in aggs],
    )


def cmd_impact(run: Run, args) -> None:
    p = _load_panel(run, args)
    a = _aligned(run, args, p)
    report = peak_analysis(a, 1 if args.raw else args.peak_smooth)
    run.write_csv(
        "impact.csv", ["unit", "peak_value", "days_to_peak", "value_at_intervention", "right_censored"],
        [(s.unit_id, s.peak_value, s.days_to_peak, s.value_at_intervention, s.right_censored)
         for s in report.stats],
    )


def _read_trajectory(path: str) -> Trajectory:
    rows = [r for r in csv.reader(open(path)) if r and not r[0].startswith("#")]
    if not rows or rows[0][:3] != ["rel_day", "actual", "counterfactual"]:
        raise SynthctlError(f"{path} is not a trajectory CSV")
    body = rows[1:]
    val = lambda s: float(s) if s else math.nan  # noqa: E731
    rel = np.array([int(r[0]) for r in body])
    return Trajectory(None, np.array([val(r[1]) for r in body]),
                      np.array([val(r[2]) for r in body]), 0, rel)


def cmd_gap(run: Run, args) -> None:
    t = _read_trajectory(run.input(args.trajectory))
    g = gap_summary(t, args.window)
    run.write_csv(
        "gap.csv", ["window_start", "window_stop", "cumulative_actual",
                    "cumulative_counterfactual", "percent_reduction"],
        [(args.window[0], args.window[1], g.cumulative_actual,
          g.cumulative_counterfactual, g.percent_reduction)],
    )


def cmd_synth_gen(run: Run, args) -> None:
    out = run.path(args.out)
    stem = out.with_suffix("")
    labels_path = run.path(f"{stem.name}_labels.csv")
    meta_path = run.path(f"{stem.name}_meta.csv")
    header = f"synthctl {__version__} synth-gen"
    if args.kind == "factor":
        panel, weights = factor_panel(args.units - 1, args.days, args.rank, seed=args.seed)
        labels = {u: "target" if u == "target" else "donor" for u in panel.units}
        panel.to_wide_csv(out, comment=header)
        run.write_csv(f"{stem.name}_weights.csv", ["donor", "weight"],
                      zip(panel.units[:-1], weights))
    else:
        regimes = {}
        for name in _names(args.regimes):
            if name not in PRESET_REGIMES:
                raise UsageError(f"unknown regime {name!r}; choose from {sorted(PRESET_REGIMES)}")
            regimes[name] = replace(PRESET_REGIMES[name], noise_sigma=args.noise)
        sp = generate_panel(args.units, regimes, args.jitter, args.seed, args.days,
                            t0_jitter=args.t0_jitter)
        panel = sp.cases if args.metric == "cases" else sp.deaths
        labels = sp.labels
        panel.to_wide_csv(out, comment=header)
    with open(labels_path, "w", newline="") as fh:
        fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["unit", "regime"])
        w.writerows(labels.items())
    write_metadata(panel.meta, meta_path)


# ---------------------------------------------------------------- parser

def _panel_flags(p: argparse.ArgumentParser, metric_required: bool = True) -> None:
    g = p.add_argument_group("panel input")
    g.add_argument("--input", required=True, help="panel CSV")
    g.add_argument("--schema", choices=("wide", "long"), default="wide")
    g.add_argument("--metric", required=metric_required,
                   help="metric label; cumulative-* or daily-* series must be chosen explicitly")
    g.add_argument("--meta", help="metadata CSV unit,population,region,intervention_date")
    g.add_argument("--smooth", type=int, default=1, help="trailing moving-average window (1 = off)")
    g.add_argument("--per-million", action="store_true")
    g.add_argument("--daily", action="store_true", help="difference a cumulative input first")


def _align_flags(p: argparse.ArgumentParser, default_rule: str = "threshold") -> None:
    g = p.add_argument_group("alignment")
    g.add_argument("--rule", choices=("threshold", "intervention", "mobility"), default=default_rule)
    g.add_argument("--threshold", type=float, default=None,
                   help=f"threshold rule level (default {DEFAULT_THRESHOLD:g})")
    g.add_argument("--per-capita", action="store_true")
    g.add_argument("--drop-pct", type=float, default=None,
                   help=f"mobility rule drop (default {DEFAULT_DROP_PCT:g})")
    g.add_argument("--sustain", type=int, default=None,
                   help=f"mobility rule sustain days (default {DEFAULT_SUSTAIN_DAYS})")
    g.add_argument("--mobility", help="mobility CSV for --rule mobility")
    g.add_argument("--train-days", type=int, default=15)
    g.add_argument("--test-up-to", type=int, default=30)


def _model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--target")
    g.add_argument("--donors", help="comma-separated donor ids")
    g.add_argument("--donor-region", help="use aligned units with this region tag as donors")
    g.add_argument("--rank", type=int, default=None, help="singular values kept (default: energy rule)")
    g.add_argument("--energy", type=float, default=DEFAULT_ENERGY)
    g.add_argument("--ridge", type=float, default=0.0)
    g.add_argument("--impute-iter", type=int, default=DEFAULT_IMPUTE_ITER)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synthctl", description="Synthetic control pipelines that write plot-ready CSV files.")
    parser.add_argument("--version", action="version", version=f"synthctl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.set_defaults(handler=handler)
        sp.add_argument("--config", help="JSON file with flag values (flags override it)")
        sp.add_argument("--out-dir", default=".")
        sp.add_argument("--seed", type=int, default=None, help="seed (fallback: $SYNTHCTL_SEED, then 0)")
        sp.add_argument("--jobs", type=int, default=1)
        return sp

    sp = add("ingest", cmd_ingest, "normalize a panel and report missing data")
    _panel_flags(sp)

    sp = add("align", cmd_align, "compute per-unit t=0 offsets and the donor/target split")
    _panel_flags(sp)
    _align_flags(sp)

    for name, handler, text in (
        ("fit", cmd_fit, "fit robust synthetic control weights for one target"),
        ("predict", cmd_predict, "project a fitted (or inline-fitted) model"),
    ):
        sp = add(name, handler, text)
        _panel_flags(sp)
        _align_flags(sp)
        _model_flags(sp)
        sp.add_argument("--window-start", type=int, default=0, help="first relative day of the matrix")
        sp.add_argument("--horizon", type=int, default=None, help="relative day where the matrix ends")
        if name == "predict":
            sp.add_argument("--model", help="model.json written by fit")

    sp = add("counterfactual", cmd_counterfactual, "counterfactual with a shifted intervention date")
    _panel_flags(sp)
    _align_flags(sp, default_rule="intervention")
    _model_flags(sp)
    sp.add_argument("--shift-days", type=int, required=True)
    sp.add_argument("--pre-days", type=int, default=14)
    sp.add_argument("--horizon", type=int, default=60)

    sp = add("si-compare", cmd_si_compare, "synthetic interventions vs a donor region, by case density")
    _panel_flags(sp)
    sp.add_argument("--donor-region", required=True)
    sp.add_argument("--reference-date", type=_iso, required=True)
    sp.add_argument("--tolerance", type=float, default=0.5)
    sp.add_argument("--rank", type=int, default=None, help="default: 3 when >= 30 donors, else donors/10")
    sp.add_argument("--bins", type=_floats, default=[6000.0, 8000.0, 10000.0, 12000.0])
    sp.add_argument("--targets", help="comma-separated target ids (default: every unit)")
    sp.add_argument("--pre-days", type=int, default=None)
    sp.add_argument("--power", type=float, default=2.0, help="NMSE normalization exponent")
    sp.add_argument("--pooled", action="store_true", help="pool county-days within a bin")

    sp = add("cluster", cmd_cluster, "k-means clustering of unit trends")
    _panel_flags(sp)
    sp.add_argument("--window", type=_window, default=None, help="calendar columns a:b")
    sp.add_argument("--k", type=int, default=4)
    sp.add_argument("--restarts", type=int, default=1)
    sp.add_argument("--normalize", action="store_true")
    sp.add_argument("--stat", action="append", help="NAME=FILE panel for per-cluster averages")
    sp.add_argument("--stat-window", type=_window, default=None)

    sp = add("impact", cmd_impact, "peak value and days-to-peak after the intervention")
    _panel_flags(sp)
    _align_flags(sp, default_rule="intervention")
    sp.add_argument("--peak-smooth", type=int, default=7)
    sp.add_argument("--raw", action="store_true", help="peaks on the unsmoothed daily series")

    sp = add("gap", cmd_gap, "totals and percent reduction of a trajectory over a window")
    sp.add_argument("--trajectory", required=True)
    sp.add_argument("--window", type=_window, required=True, help="relative days a:b (b exclusive)")

    sp = add("synth-gen", cmd_synth_gen, "generate a synthetic SIR (or low-rank) panel")
    sp.add_argument("--kind", choices=("sir", "factor"), default="sir")
    sp.add_argument("--units", type=int, default=50)
    sp.add_argument("--days", type=int, default=180)
    sp.add_argument("--regimes", default="strict,loose")
    sp.add_argument("--metric", choices=("cases", "deaths"), default="cases")
    sp.add_argument("--jitter", type=float, default=0.1)
    sp.add_argument("--t0-jitter", type=int, default=0)
    sp.add_argument("--noise", type=float, default=0.0)
    sp.add_argument("--rank", type=int, default=3, help="factor kind only")
    sp.add_argument("--out", default="panel.csv")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    # find the subcommand and --config first so the file can supply required flags
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    early, _ = pre.parse_known_args(argv)
    subparsers = parser._subparsers._group_actions[0].choices  # noqa: SLF001
    if early.config and early.command in subparsers:
        try:
            with open(early.config) as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {early.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError(f"config {early.config} must hold a JSON object")
        sub = subparsers[early.command]
        actions = {a.dest: a for a in sub._actions}  # noqa: SLF001
        defaults = {}
        for key, value in cfg.items():
            action = actions.get(key.lstrip("-").replace("-", "_"))
            if action is None or action.dest in ("help", "config"):
                raise UsageError(f"unknown config key {key!r} for {early.command}")
            if action.type is not None and isinstance(value, str):
                value = action.type(value)
            if action.choices is not None and value not in action.choices:
                raise UsageError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
            defaults[action.dest] = value
            action.required = False
        sub.set_defaults(**defaults)
    args = parser.parse_args(argv)
    if args.seed is None:
        env = os.environ.get("SYNTHCTL_SEED")
        args.seed = int(env) if env else 0
    return args


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, argparse.ArgumentTypeError) as exc:
        print(f"synthctl: usage error: {exc}", file=sys.stderr)
        return 2
    run = Run(args.command, args)
    try:
        args.handler(run, args)
    except UsageError as exc:
        print(f"synthctl: usage error: {exc}", file=sys.stderr)
        return 2
    except (SynthctlError, KeyError, ValueError) as exc:
        msg = " ".join(str(exc).split())
        print(f"synthctl: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    run.write_manifest()
    return 0


if __name__ == "__main__":
    sys.exit(main())
