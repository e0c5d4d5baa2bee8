"""Command-line pipeline front end.

Subcommands chain the full workflow: generate -> profile -> impute ->
validate-topology -> train -> evaluate -> sweep -> report.  A JSON
config file is the source of truth; flags override individual keys.
Every subcommand writes a manifest.json into its output directory that
embeds the effective config, so a previous run can be repeated exactly
with ``--config <out>/manifest.json``.

Errors are reported as a single machine-readable JSON record on stderr
with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import evaluation as ev
from .dataset import DateRange, Normalizer, concat_windows, make_windows, weekly_split
from .models import (
    ARCHITECTURES,
    DailyProfilePredictor,
    ModelConfig,
    NeuralModel,
    build_model,
    load_checkpoint,
)
from .numcore import BACKEND
from .profiling import build_profile, detect_missing, impute, mask_from_runs, monthly_missing_counts
from .series import FlowSeries, read_csv, write_csv
from .synthgen import GeneratorConfig, generate, inject_missing
from .topology import load_topology, save_topology, validate_conservation
from .training import TrainConfig, train


class CliError(Exception):
    """Expected failure, reported as an error record instead of a traceback."""

    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------


def default_config() -> dict:
    g = asdict(GeneratorConfig())
    g["start"] = GeneratorConfig().start.isoformat()
    g["holidays"] = []
    g["weekday_scale"] = list(g["weekday_scale"])
    return {
        "paths": {"data_dir": "data", "model_dir": "models", "results_dir": "results"},
        "data": {"source": "auto"},
        "generate": g,
        "missing": {"fraction": 0.01, "seed": 1, "min_run": 1, "max_run": 20},
        "profile": {"detect_threshold": 10.0, "weekday": 0},
        "validate": {"source": "measured", "epsilon": None, "min_fraction_ok": 0.99},
        "split": {
            "start": g["start"],
            "train_weeks": 8,
            "val_weeks": 1,
            "test_weeks": 1,
            "exclude": [],
        },
        "model": {
            "arch": "lstm",
            "past_horizon": 12,
            "lead": 1,
            "hidden": 256,
            "station_hidden": 10,
            "conv_channels": [16, 32],
            "conv1d_channels": 8,
            "kernel": 3,
            "lstm_hidden": 64,
            "seed": 0,
        },
        "train": {
            "batch_size": 50,
            "learning_rate": 0.0003,
            "l2": 1e-8,
            "patience": 3,
            "max_epochs": 100,
            "seed": 0,
        },
        "evaluate": {"dataset": "test", "station": None, "day": None},
        "sweep": {"past_horizons": [1, 3, 6, 12, 24], "leads": [1, 5, 10], "repeats": 5, "workers": 1},
    }


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, val in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise CliError("config", f"unknown config key {here!r}")
        if isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge(base[key], val, here)
        else:
            out[key] = val
    return out


def load_config(path: str | None) -> dict:
    cfg = default_config()
    if path is None:
        return cfg
    try:
        obj = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise CliError("missing-input", f"config file {path} not found")
    except json.JSONDecodeError as e:
        raise CliError("config", f"config file {path} is not valid JSON: {e}")
    if "command" in obj and "config" in obj:
        obj = obj["config"]  # accept a previous run's manifest
    if not isinstance(obj, dict):
        raise CliError("config", f"config file {path} must hold a JSON object")
    return _merge(cfg, obj)


def apply_overrides(cfg: dict, args: argparse.Namespace) -> None:
    if args.arch is not None:
        cfg["model"]["arch"] = args.arch
    if args.R is not None:
        cfg["model"]["past_horizon"] = args.R
    if args.P is not None:
        cfg["model"]["lead"] = args.P
    if args.workers is not None:
        cfg["sweep"]["workers"] = args.workers
    for spec in args.exclude_range or []:
        parts = spec.split(":")
        if len(parts) != 2:
            raise CliError("config", f"--exclude-range wants FIRST:LAST dates, got {spec!r}")
        cfg["split"]["exclude"].append(parts)
    if args.seed is not None:
        if args.command == "generate":
            cfg["generate"]["seed"] = args.seed
        else:
            cfg["train"]["seed"] = args.seed
            cfg["model"]["seed"] = args.seed


def _generator_config(obj: dict) -> GeneratorConfig:
    kwargs = dict(obj)
    kwargs["start"] = date.fromisoformat(obj["start"])
    kwargs["holidays"] = tuple(date.fromisoformat(h) for h in obj["holidays"])
    kwargs["weekday_scale"] = tuple(obj["weekday_scale"])
    return GeneratorConfig(**kwargs)


def _split_from(cfg: dict):
    sp = cfg["split"]
    split = weekly_split(
        date.fromisoformat(sp["start"]), sp["train_weeks"], sp["val_weeks"], sp["test_weeks"]
    )
    for pair in sp["exclude"]:
        split = split.exclude(DateRange.parse(pair))
    return split


# ---------------------------------------------------------------------------
# IO helpers
# ---------------------------------------------------------------------------

_SOURCES = {"measured": "flows.csv", "imputed": "imputed.csv", "noiseless": "noiseless.csv"}


def _load_series(data_dir: Path, source: str) -> tuple[dict[str, FlowSeries], Path]:
    if source == "auto":
        path = data_dir / _SOURCES["imputed"]
        if not path.exists():
            path = data_dir / _SOURCES["measured"]
    elif source in _SOURCES:
        path = data_dir / _SOURCES[source]
    else:
        raise CliError("config", f"unknown data source {source!r}; pick one of {sorted(_SOURCES)}")
    if not path.exists():
        raise CliError("missing-input", f"{path} not found; run `flowcast generate` first")
    return read_csv(path), path


def _load_topology(data_dir: Path):
    path = data_dir / "topology.json"
    if not path.exists():
        raise CliError("missing-input", f"{path} not found; run `flowcast generate` first")
    return load_topology(path)


def _apply_runs(all_series: dict[str, FlowSeries], runs) -> dict[str, FlowSeries]:
    out = {}
    for key, s in all_series.items():
        mine = [r for r in runs if r.station == key]
        if mine:
            mask = s.missing | mask_from_runs(len(s), mine)
            s = FlowSeries(s.station, s.start, s.values, mask)
        out[key] = s
    return out


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _out_dir(args: argparse.Namespace, default: Path) -> Path:
    out = Path(args.out) if args.out else default
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def write_manifest(out: Path, command: str, cfg: dict, seeds: dict, inputs, outputs) -> Path:
    manifest = {
        "command": command,
        "config": cfg,
        "config_sha256": _config_hash(cfg),
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "inputs": sorted(str(p) for p in inputs),
        "outputs": sorted(str(p) for p in outputs),
        "seeds": seeds,
        "versions": {"flowcast": __version__, "backend": BACKEND, "numpy": np.__version__},
    }
    path = out / "manifest.json"
    _write_json(path, manifest)
    return path


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args: argparse.Namespace, cfg: dict) -> int:
    out = _out_dir(args, Path(cfg["paths"]["data_dir"]))
    gcfg = _generator_config(cfg["generate"])
    ds = generate(gcfg)
    m = cfg["missing"]
    if m["fraction"] > 0:
        ds = inject_missing(
            ds, fraction=m["fraction"], seed=m["seed"], min_run=m["min_run"], max_run=m["max_run"]
        )
    outputs = [out / "flows.csv", out / "noiseless.csv", out / "topology.json", out / "injected.json"]
    write_csv(outputs[0], list(ds.measured.values()))
    write_csv(outputs[1], list(ds.noiseless.values()))
    save_topology(outputs[2], ds.topology)
    _write_json(
        outputs[3],
        [{"station": r.station, "start": r.start, "length": r.length} for r in ds.injected],
    )
    write_manifest(
        out, "generate", cfg, {"generate": gcfg.seed, "missing": m["seed"]}, [], outputs
    )
    print(
        f"generated {len(ds.stations)} stations x {ds.n} TIs "
        f"({gcfg.days} days, seed {gcfg.seed}) -> {out}"
    )
    return 0


def cmd_profile(args: argparse.Namespace, cfg: dict) -> int:
    data_dir = Path(cfg["paths"]["data_dir"])
    series, src = _load_series(data_dir, "measured")
    topo = _load_topology(data_dir)
    runs = detect_missing(series, topo, threshold=cfg["profile"]["detect_threshold"])
    marked = _apply_runs(series, runs)
    profiles = {k: build_profile(s) for k, s in sorted(marked.items())}

    out = _out_dir(args, Path(cfg["paths"]["results_dir"]) / "profile")
    DailyProfilePredictor(profiles).save(out / "profile.fcp")
    with open(out / "missing_counts.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["year", "month", "count"])
        for (year, month), count in monthly_missing_counts(marked).items():
            w.writerow([year, month, count])
    with open(out / "detected_missing.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["station", "start_ti", "length", "reason"])
        for r in runs:
            w.writerow([r.station, r.start, r.length, r.reason])
    stations, matrix = ev.congestion_map(
        profiles, capacity=cfg["generate"]["capacity"], weekday=cfg["profile"]["weekday"]
    )
    ev.write_congestion_csv(out / "congestion.csv", stations, matrix)
    ev.plot_congestion(out / "congestion.svg", stations, matrix)
    outputs = [
        out / "profile.fcp",
        out / "missing_counts.csv",
        out / "detected_missing.csv",
        out / "congestion.csv",
        out / "congestion.svg",
    ]
    write_manifest(out, "profile", cfg, {}, [src], outputs)
    print(f"profiled {len(profiles)} stations, {len(runs)} anomalous runs flagged -> {out}")
    return 0


def cmd_impute(args: argparse.Namespace, cfg: dict) -> int:
    data_dir = Path(cfg["paths"]["data_dir"])
    series, src = _load_series(data_dir, "measured")
    topo = _load_topology(data_dir)
    runs = detect_missing(series, topo, threshold=cfg["profile"]["detect_threshold"])

    out = _out_dir(args, data_dir)
    filled_series = []
    per_station = {}
    unimputable = 0
    for key in sorted(series):
        result = impute(series[key], runs=[r for r in runs if r.station == key])
        filled_series.append(result.series)
        per_station[key] = result.filled
        unimputable += sum(r.length for r in result.unimputable)
    write_csv(out / "imputed.csv", filled_series)
    stats = {
        "filled": sum(per_station.values()),
        "unimputable_cells": unimputable,
        "per_station": per_station,
    }
    _write_json(out / "imputation.json", stats)
    write_manifest(out, "impute", cfg, {}, [src], [out / "imputed.csv", out / "imputation.json"])
    print(
        f"imputed {stats['filled']} cells ({unimputable} unimputable) -> {out / 'imputed.csv'}"
    )
    return 0


def cmd_validate_topology(args: argparse.Namespace, cfg: dict) -> int:
    data_dir = Path(cfg["paths"]["data_dir"])
    v = cfg["validate"]
    series, src = _load_series(data_dir, v["source"])
    topo = _load_topology(data_dir)
    epsilon = v["epsilon"]
    if epsilon is None:
        epsilon = 0.0 if v["source"] == "noiseless" else 3.0 * cfg["generate"]["noise_sigma"]
    report = validate_conservation(topo, series, epsilon)

    out = _out_dir(args, data_dir)
    _write_json(
        out / "conservation.json",
        {
            "epsilon": epsilon,
            "n_checked": report.n_checked,
            "n_violations": report.n_violations,
            "fraction_ok": report.fraction_ok,
            "max_abs_residual": report.max_abs_residual,
            "checks": [
                {
                    "kind": c.kind,
                    "stations": list(c.stations),
                    "n_checked": c.n_checked,
                    "n_violations": c.n_violations,
                    "max_abs_residual": c.max_abs_residual,
                }
                for c in report.checks
            ],
        },
    )
    write_manifest(out, "validate-topology", cfg, {}, [src], [out / "conservation.json"])
    print(report.summary())
    if report.fraction_ok < v["min_fraction_ok"]:
        raise CliError(
            "conservation",
            f"only {report.fraction_ok:.4f} of cells within epsilon={epsilon:g} "
            f"(required {v['min_fraction_ok']:.4f})",
        )
    return 0


def cmd_train(args: argparse.Namespace, cfg: dict) -> int:
    data_dir = Path(cfg["paths"]["data_dir"])
    series, src = _load_series(data_dir, cfg["data"]["source"])
    split = _split_from(cfg)
    arch = cfg["model"]["arch"]
    out = _out_dir(args, Path(cfg["paths"]["model_dir"]))

    if arch in ("dpp", "arima"):
        predictor = ev.fit_baseline(arch, series, split)
        path = out / ("dpp.fcp" if arch == "dpp" else "arima.json")
        predictor.save(path)
        write_manifest(out, "train", cfg, {}, [src], [path])
        print(f"fitted {arch} baseline on training ranges -> {path}")
        return 0

    mcfg = ModelConfig.from_json(cfg["model"])
    tcfg = TrainConfig(**cfg["train"])
    start = next(iter(series.values())).start
    train_w = concat_windows(
        [
            make_windows(series, mcfg.past_horizon, mcfg.lead, rg)
            for rg in split.train_ti_ranges(start)
        ]
    )
    val_w = make_windows(series, mcfg.past_horizon, mcfg.lead, split.validation_ti_range(start))
    if len(train_w) == 0 or len(val_w) == 0:
        raise CliError("empty-split", "train or validation range yields no windows")
    normalizer = Normalizer.fit(train_w)
    model = build_model(mcfg, len(train_w.stations))
    model, report = train(
        model, normalizer.transform(train_w), normalizer.transform(val_w), tcfg,
        normalizer=normalizer,
    )
    _write_json(out / "train_report.json", report.to_json())
    if report.diverged:
        raise CliError("diverged", f"training diverged in epoch {report.epochs_run}")
    ckpt = out / f"{arch}.fcp"
    model.save(ckpt)
    _write_json(out / "normalizer.json", normalizer.to_json())
    write_manifest(
        out,
        "train",
        cfg,
        {"model": mcfg.seed, "train": tcfg.seed},
        [src],
        [ckpt, out / "normalizer.json", out / "train_report.json"],
    )
    print(
        f"trained {arch} (R={mcfg.past_horizon}, P={mcfg.lead}): "
        f"best val RMSE {report.best_val_loss:.3f} at epoch {report.best_epoch + 1}"
        f"/{report.epochs_run} ({report.stop_reason}) -> {ckpt}"
    )
    return 0


def cmd_evaluate(args: argparse.Namespace, cfg: dict) -> int:
    data_dir = Path(cfg["paths"]["data_dir"])
    series, src = _load_series(data_dir, cfg["data"]["source"])
    split = _split_from(cfg)
    arch = cfg["model"]["arch"]
    model_dir = Path(cfg["paths"]["model_dir"])
    ckpt = model_dir / ("arima.json" if arch == "arima" else f"{arch}.fcp")
    if not ckpt.exists():
        raise CliError("missing-input", f"{ckpt} not found; run `flowcast train --arch {arch}` first")
    predictor = load_checkpoint(ckpt)

    normalizer = None
    if isinstance(predictor, NeuralModel):
        past_horizon = predictor.config.past_horizon
        lead = predictor.config.lead
        for flag, trained in (("R", past_horizon), ("P", lead)):
            given = getattr(args, flag)
            if given is not None and given != trained:
                raise CliError(
                    "config",
                    f"checkpoint was trained with --{flag} {trained}; "
                    f"cannot evaluate it at --{flag} {given}",
                )
        norm_path = model_dir / "normalizer.json"
        if not norm_path.exists():
            raise CliError("missing-input", f"{norm_path} not found next to the checkpoint")
        normalizer = Normalizer.from_json(json.loads(norm_path.read_text()))
    else:
        past_horizon = cfg["model"]["past_horizon"]
        lead = cfg["model"]["lead"]

    which = cfg["evaluate"]["dataset"]
    if which not in ("validation", "test"):
        raise CliError("config", f"evaluate.dataset must be validation or test, not {which!r}")
    start = next(iter(series.values())).start
    ti_range = (
        split.test_ti_range(start) if which == "test" else split.validation_ti_range(start)
    )
    report = ev.evaluate(
        predictor, series, ti_range, past_horizon, lead,
        normalizer=normalizer, dataset_name=which, per_station=True,
    )

    station = cfg["evaluate"]["station"] or sorted(series)[0]
    day_str = cfg["evaluate"]["day"]
    day = (
        date.fromisoformat(day_str)
        if day_str
        else (split.test.first if which == "test" else split.validation.first)
    )
    rs = ev.residual_series(predictor, series, station, day, past_horizon, lead, normalizer)

    out = _out_dir(args, Path(cfg["paths"]["results_dir"]) / f"{arch}-R{past_horizon}-P{lead}")
    ev.write_metrics_csv(out / "metrics.csv", [report])
    ev.write_station_metrics_csv(out / "stations.csv", report)
    ev.write_residuals_csv(out / "residuals.csv", rs)
    ev.plot_residuals(out / "residuals.svg", rs)
    _write_json(
        out / "residual_summary.json",
        {
            "station": station,
            "day": day.isoformat(),
            "peak_max_relative_error": rs.peak_max_relative_error,
        },
    )
    outputs = [
        out / "metrics.csv",
        out / "stations.csv",
        out / "residuals.csv",
        out / "residuals.svg",
        out / "residual_summary.json",
    ]
    write_manifest(out, "evaluate", cfg, {}, [src, ckpt], outputs)
    print(
        f"{arch} on {which} (R={past_horizon}, P={lead}): "
        f"RMSE {report.rmse:.3f}  MAE {report.mae:.3f}  SMAPE {report.smape:.2f} "
        f"({report.n_points} points) -> {out}"
    )
    return 0


def cmd_sweep(args: argparse.Namespace, cfg: dict) -> int:
    data_dir = Path(cfg["paths"]["data_dir"])
    series, src = _load_series(data_dir, cfg["data"]["source"])
    split = _split_from(cfg)
    arch = cfg["model"]["arch"]
    sw = cfg["sweep"]
    model_kwargs = {
        k: v for k, v in cfg["model"].items() if k not in ("arch", "past_horizon", "lead", "seed")
    }
    model_kwargs["conv_channels"] = tuple(model_kwargs["conv_channels"])
    result = ev.sweep(
        arch,
        series,
        split,
        past_horizons=sw["past_horizons"],
        leads=sw["leads"],
        train_config=TrainConfig(**cfg["train"]),
        model_kwargs=model_kwargs,
        repeats=sw["repeats"],
        workers=sw["workers"],
    )

    out = _out_dir(args, Path(cfg["paths"]["results_dir"]) / f"sweep-{arch}")
    ev.write_sweep_csv(out / "sweep.csv", result)
    ev.plot_sweep_heatmap(out / "sweep.svg", result)
    outputs = [out / "sweep.csv", out / "sweep.svg", out / "sweep.json", out / "best_table.csv"]
    try:
        rows = result.best_rows()
    except ValueError as e:
        _write_json(out / "sweep.json", {"arch": arch, "error": str(e)})
        write_manifest(out, "sweep", cfg, {"train": cfg["train"]["seed"]}, [src], outputs[:3])
        raise CliError("diverged", str(e))
    _write_json(out / "sweep.json", result.to_json())
    ev.write_best_table_csv(out / "best_table.csv", result)
    write_manifest(out, "sweep", cfg, {"train": cfg["train"]["seed"]}, [src], outputs)
    for row in rows:
        print(
            f"{arch} P={row['lead']}: best R={row['best_past_horizon']} "
            f"(val RMSE {row['val_mean']:.3f}, test RMSE {row['test_mean']:.3f})"
        )
    bad = result.diverged_cells()
    if bad:
        print(f"warning: diverged repeats in cells {bad}", file=sys.stderr)
    return 0


def cmd_report(args: argparse.Namespace, cfg: dict) -> int:
    results_dir = Path(cfg["paths"]["results_dir"])
    metric_files = sorted(results_dir.glob("*/metrics.csv"))
    sweep_files = sorted(results_dir.glob("*/sweep.json"))
    if not metric_files and not sweep_files:
        raise CliError("no-results", f"no results found under {results_dir}")

    rows = []
    for path in metric_files:
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                rows.append(
                    ev.MetricReport(
                        model=rec["model"],
                        past_horizon=int(rec["past_horizon"]),
                        lead=int(rec["lead"]),
                        dataset=rec["dataset"],
                        rmse=float(rec["rmse"]),
                        mae=float(rec["mae"]),
                        smape=float(rec["smape"]),
                        n_points=int(rec["n_points"]),
                    )
                )
    rows.sort(key=lambda r: (r.dataset, r.lead, r.rmse, r.model))

    out = _out_dir(args, results_dir / "report")
    outputs = []
    if rows:
        ev.write_metrics_csv(out / "comparison.csv", rows)
        outputs.append(out / "comparison.csv")
        groups = sorted({(r.dataset, r.lead) for r in rows})
        for dataset, lead in groups:
            group = [r for r in rows if (r.dataset, r.lead) == (dataset, lead)]
            path = out / f"comparison-{dataset}-P{lead}.svg"
            ev.plot_model_comparison(path, group)
            outputs.append(path)

    best_rows = []
    for path in sweep_files:
        obj = json.loads(path.read_text())
        for row in obj.get("best", []):
            best_rows.append([obj["arch"], row["lead"], row["best_past_horizon"], row["val_mean"], row["test_mean"]])
    if best_rows:
        best_rows.sort(key=lambda r: (r[0], r[1]))
        with open(out / "best_tables.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["arch", "lead", "best_past_horizon", "val_mean", "test_mean"])
            for row in best_rows:
                w.writerow([row[0], row[1], row[2], repr(float(row[3])), repr(float(row[4]))])
        outputs.append(out / "best_tables.csv")

    write_manifest(out, "report", cfg, {}, metric_files + sweep_files, outputs)
    print(f"report over {len(rows)} metric rows and {len(sweep_files)} sweeps -> {out}")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "generate": (cmd_generate, "synthesize the motorway network and its flow data"),
    "profile": (cmd_profile, "build daily profiles, flag anomalies, export the congestion map"),
    "impute": (cmd_impute, "fill missing cells from same-month weekday/TI means"),
    "validate-topology": (cmd_validate_topology, "check flow conservation on every link"),
    "train": (cmd_train, "train one model (or fit a baseline) on the training split"),
    "evaluate": (cmd_evaluate, "score a trained checkpoint and export residuals"),
    "sweep": (cmd_sweep, "train the full R x P grid and pick best R per lead"),
    "report": (cmd_report, "aggregate evaluation and sweep outputs into one report"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flowcast", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (func, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="JSON config file or a manifest.json")
        p.add_argument("--seed", type=int, default=None, help="override the subcommand's seed")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--arch", choices=ARCHITECTURES, default=None)
        p.add_argument("--R", type=int, default=None, help="past horizon (TIs)")
        p.add_argument("--P", type=int, default=None, help="prediction horizon (TIs)")
        p.add_argument("--workers", type=int, default=None, help="parallel sweep workers")
        p.add_argument(
            "--exclude-range",
            action="append",
            default=None,
            metavar="FIRST:LAST",
            help="drop an inclusive date range from training (repeatable)",
        )
        p.set_defaults(func=func)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        apply_overrides(cfg, args)
        return args.func(args, cfg)
    except CliError as e:
        print(json.dumps({"error": e.category, "message": str(e)}), file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError) as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
