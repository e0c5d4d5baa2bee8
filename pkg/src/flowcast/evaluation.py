"""Metrics, model comparison, horizon sweeps, and report exports.

Metric conventions: RMSE = sqrt(mean(squared error)), MAE =
mean(|error|), SMAPE = mean of 200*|f - fhat| / (|f| + |fhat|) with 0/0
terms defined as 0, so SMAPE lives in [0, 200].  All reported values
pool every (station, TI) residual of the evaluated range and are in
vehicle-count units.

Evaluation target sets differ by predictor family, on purpose: neural
predictors are scored on the sliding-window targets of the range, while
the profile and ARIMA baselines are scored at every TI of the range.
This keeps the profile baseline's metric exactly independent of both R
and P.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import date

import numpy as np

from .dataset import Normalizer, SplitSpec, WindowSet, concat_windows, make_windows, stack_series
from .models import (
    ArimaPredictor,
    DailyProfilePredictor,
    ModelConfig,
    NeuralModel,
    arima_rolling_forecast,
    build_model,
)
from .profiling import DailyProfile, build_profile
from .series import FlowSeries, date_range_to_ti
from .training import TrainConfig, train_repeated, validation_rmse

# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def _flat_pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise ValueError("empty input")
    return pred, truth


def rmse(pred, truth) -> float:
    pred, truth = _flat_pair(pred, truth)
    diff = pred - truth
    return float(np.sqrt(np.mean(diff * diff)))


def mae(pred, truth) -> float:
    pred, truth = _flat_pair(pred, truth)
    return float(np.mean(np.abs(pred - truth)))


def smape(pred, truth) -> float:
    pred, truth = _flat_pair(pred, truth)
    num = np.abs(pred - truth)
    den = np.abs(pred) + np.abs(truth)
    # num <= den holds exactly in IEEE, so dividing before scaling keeps
    # every term (and the mean) at or below 200 even in the worst case.
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(200.0 * np.mean(terms))


@dataclass
class MetricReport:
    model: str
    past_horizon: int
    lead: int
    dataset: str
    rmse: float
    mae: float
    smape: float
    n_points: int
    per_station: dict[str, float] | None = None

    def to_json(self) -> dict:
        out = {
            "model": self.model,
            "past_horizon": self.past_horizon,
            "lead": self.lead,
            "dataset": self.dataset,
            "rmse": self.rmse,
            "mae": self.mae,
            "smape": self.smape,
            "n_points": self.n_points,
        }
        if self.per_station is not None:
            out["per_station"] = self.per_station
        return out


# ---------------------------------------------------------------------------
# Prediction collection
# ---------------------------------------------------------------------------


def predict_windows(model: NeuralModel, windows: WindowSet, normalizer: Normalizer) -> np.ndarray:
    """Vehicle-unit predictions for raw (un-normalized) windows."""
    preds = []
    for at in range(0, len(windows), 1024):
        sel = slice(at, at + 1024)
        x = (windows.inputs[sel] - normalizer.mean[:, None]) / normalizer.scale[:, None]
        preds.append(normalizer.inverse(model.forward(x)))
    return np.concatenate(preds) if preds else np.empty((0, len(windows.stations)))


def _range_arrays(all_series: dict[str, FlowSeries], ti_range: tuple[int, int]):
    values, missing, order = stack_series(all_series)
    a, b = ti_range
    any_series = all_series[order[0]]
    weekday = any_series.day_of_week()[a:b]
    ti = any_series.ti_of_day()[a:b]
    return values, missing, order, a, b, weekday, ti


def collect_predictions(
    predictor,
    all_series: dict[str, FlowSeries],
    ti_range: tuple[int, int],
    past_horizon: int,
    lead: int,
    normalizer: Normalizer | None = None,
):
    """(predictions, truths, valid mask, stations) over the evaluation range.

    Neural models predict the range's window targets; the profile and
    ARIMA baselines predict every TI of the range.  Masked truth cells
    are marked invalid rather than dropped, so callers can still line
    predictions up with time.

    The ARIMA baseline refits on the trailing history before every
    anchor, so run imputation first: masked cells would otherwise enter
    the fit as zeros.
    """
    if isinstance(predictor, NeuralModel):
        if normalizer is None:
            raise ValueError("neural evaluation requires the training normalizer")
        windows = make_windows(all_series, past_horizon, lead, ti_range)
        if len(windows) == 0:
            raise ValueError("evaluation range yields no windows")
        preds = predict_windows(predictor, windows, normalizer)
        valid = np.ones(preds.shape, dtype=bool)
        return preds, windows.targets, valid, windows.stations

    values, missing, order, a, b, weekday, ti = _range_arrays(all_series, ti_range)
    truths = values[a:b]
    valid = ~missing[a:b]

    if isinstance(predictor, DailyProfilePredictor):
        if predictor.stations != order:
            raise ValueError("profile stations do not match the data")
        preds = predictor.predict(weekday, ti)
        valid &= np.isfinite(preds)
        return preds, truths, valid, order

    if isinstance(predictor, ArimaPredictor):
        if predictor.stations != order:
            raise ValueError("fitted stations do not match the data")
        targets = np.arange(a, b)
        anchors = targets - lead
        p0 = predictor.station_params[order[0]]
        usable = anchors >= p0.p + p0.d + 1
        preds = np.full((b - a, len(order)), np.nan)
        for j, sid in enumerate(order):
            params = predictor.station_params[sid]
            preds[usable, j] = arima_rolling_forecast(
                values[:, j],
                anchors[usable],
                lead,
                p=params.p,
                d=params.d,
                q=params.q,
                max_history=params.max_history,
            )
        valid &= np.isfinite(preds)
        return preds, truths, valid, order

    raise TypeError(f"cannot evaluate predictor of type {type(predictor).__name__}")


def evaluate(
    predictor,
    all_series: dict[str, FlowSeries],
    ti_range: tuple[int, int],
    past_horizon: int,
    lead: int,
    normalizer: Normalizer | None = None,
    dataset_name: str = "test",
    per_station: bool = False,
) -> MetricReport:
    """Pooled RMSE/MAE/SMAPE of ``predictor`` over one TI range."""
    preds, truths, valid, order = collect_predictions(
        predictor, all_series, ti_range, past_horizon, lead, normalizer
    )
    breakdown = None
    if per_station:
        breakdown = {}
        for j, sid in enumerate(order):
            keep = valid[:, j]
            if keep.any():
                breakdown[sid] = rmse(preds[keep, j], truths[keep, j])
    p, t = preds[valid], truths[valid]
    return MetricReport(
        model=predictor.arch,
        past_horizon=past_horizon,
        lead=lead,
        dataset=dataset_name,
        rmse=rmse(p, t),
        mae=mae(p, t),
        smape=smape(p, t),
        n_points=int(valid.sum()),
        per_station=breakdown,
    )


# ---------------------------------------------------------------------------
# Residual analysis
# ---------------------------------------------------------------------------

# Peak windows for the relative-error summary: 07:00-10:00 and 16:00-19:00.
_PEAKS = ((7 * 20, 10 * 20), (16 * 20, 19 * 20))


@dataclass
class ResidualSeries:
    station: str
    day: date
    observed: np.ndarray
    predicted: np.ndarray

    @property
    def residual(self) -> np.ndarray:
        return self.predicted - self.observed

    @property
    def peak_max_relative_error(self) -> float:
        """max |residual| / observed over the AM and PM peak windows."""
        worst = 0.0
        for lo, hi in _PEAKS:
            obs = self.observed[lo:hi]
            res = self.residual[lo:hi]
            ok = (obs > 0) & np.isfinite(res)
            if ok.any():
                worst = max(worst, float(np.max(np.abs(res[ok]) / obs[ok])))
        return worst


def residual_series(
    predictor,
    all_series: dict[str, FlowSeries],
    station: str,
    day: date,
    past_horizon: int,
    lead: int,
    normalizer: Normalizer | None = None,
) -> ResidualSeries:
    """Observed versus predicted flow for one station over one full day.

    Unlike range evaluation, the day's early predictions may reach back
    before midnight for their input windows, so all 480 TIs are covered
    (NaN only where inputs are unavailable or masked).
    """
    values, missing, order, a, b, weekday, ti = _range_arrays(
        all_series, date_range_to_ti(next(iter(all_series.values())).start, day, day)
    )
    if station not in order:
        raise KeyError(f"unknown station {station!r}")
    j = order.index(station)
    observed = np.where(missing[a:b, j], np.nan, values[a:b, j])

    if isinstance(predictor, NeuralModel):
        if normalizer is None:
            raise ValueError("neural evaluation requires the training normalizer")
        targets = np.arange(a, b)
        anchors = targets - lead
        bad = missing.any(axis=1)
        r = past_horizon
        usable = anchors - r + 1 >= 0
        for off in range(r):
            usable &= ~bad[np.maximum(anchors - off, 0)]
        idx = anchors[usable, None] + np.arange(-r + 1, 1)[None, :]
        inputs = np.ascontiguousarray(values[idx].transpose(0, 2, 1))
        windows = WindowSet(
            inputs=inputs,
            targets=values[targets[usable]],
            anchors=anchors[usable],
            stations=order,
            past_horizon=r,
            lead=lead,
        )
        predicted = np.full(b - a, np.nan)
        predicted[usable] = predict_windows(predictor, windows, normalizer)[:, j]
    elif isinstance(predictor, DailyProfilePredictor):
        predicted = predictor.predict(weekday, ti)[:, j]
    elif isinstance(predictor, ArimaPredictor):
        params = predictor.station_params[station]
        targets = np.arange(a, b)
        anchors = targets - lead
        usable = anchors >= params.p + params.d + 1
        predicted = np.full(b - a, np.nan)
        predicted[usable] = arima_rolling_forecast(
            values[:, j],
            anchors[usable],
            lead,
            p=params.p,
            d=params.d,
            q=params.q,
            max_history=params.max_history,
        )
    else:
        raise TypeError(f"cannot evaluate predictor of type {type(predictor).__name__}")

    return ResidualSeries(station=station, day=day, observed=observed, predicted=predicted)


# ---------------------------------------------------------------------------
# R x P sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepCell:
    arch: str
    past_horizon: int
    lead: int
    val_mean: float
    val_std: float
    test_mean: float
    test_std: float
    n_runs: int
    n_diverged: int
    seconds_mean: float

    @property
    def missing(self) -> bool:
        return self.n_runs == 0


@dataclass
class SweepResult:
    arch: str
    past_horizons: list[int]
    leads: list[int]
    cells: dict[tuple[int, int], SweepCell]

    def cell(self, past_horizon: int, lead: int) -> SweepCell:
        return self.cells[(past_horizon, lead)]

    def best_past_horizon(self, lead: int) -> int:
        """Smallest R minimizing mean validation RMSE at this lead."""
        usable = [
            (self.cells[(r, lead)].val_mean, r)
            for r in self.past_horizons
            if not self.cells[(r, lead)].missing
        ]
        if not usable:
            raise ValueError(f"every cell diverged at lead={lead}")
        best_val = min(v for v, _ in usable)
        return min(r for v, r in usable if v == best_val)

    def best_rows(self) -> list[dict]:
        rows = []
        for p in self.leads:
            r = self.best_past_horizon(p)
            cell = self.cells[(r, p)]
            rows.append(
                {
                    "lead": p,
                    "best_past_horizon": r,
                    "val_mean": cell.val_mean,
                    "test_mean": cell.test_mean,
                }
            )
        return rows

    def diverged_cells(self) -> list[tuple[int, int]]:
        return sorted(k for k, c in self.cells.items() if c.n_diverged > 0)

    def to_json(self) -> dict:
        return {
            "arch": self.arch,
            "past_horizons": self.past_horizons,
            "leads": self.leads,
            "cells": [
                {
                    "past_horizon": c.past_horizon,
                    "lead": c.lead,
                    "val_mean": c.val_mean,
                    "val_std": c.val_std,
                    "test_mean": c.test_mean,
                    "test_std": c.test_std,
                    "n_runs": c.n_runs,
                    "n_diverged": c.n_diverged,
                    "seconds_mean": c.seconds_mean,
                }
                for _, c in sorted(self.cells.items())
            ],
            "best": self.best_rows(),
        }


def derive_seed(base: int, *key: int) -> int:
    """Deterministic, order-independent seed for one grid cell/run."""
    return int(np.random.SeedSequence(entropy=(base, *key)).generate_state(1)[0])


def profile_on_ranges(
    s: FlowSeries, ti_ranges: list[tuple[int, int]], period: tuple[date, date]
) -> DailyProfile:
    """Build a profile using only the given TI ranges as source data.

    Everything outside the ranges is masked off first, so disjoint
    training stretches never leak neighbouring (validation/test) data
    through the profile.
    """
    keep = np.zeros(len(s), dtype=bool)
    for a, b in ti_ranges:
        keep[a:b] = True
    masked = FlowSeries(s.station, s.start, s.values, s.missing | ~keep)
    return build_profile(masked, period)


def fit_baseline(
    arch: str,
    all_series: dict[str, FlowSeries],
    split: SplitSpec,
    max_history: int = 100,
):
    """Build the dpp or arima predictor from the training ranges."""
    start = next(iter(all_series.values())).start
    ranges = split.train_ti_ranges(start)
    if arch == "dpp":
        period = (min(r.first for r in split.train), max(r.last for r in split.train))
        profiles = {k: profile_on_ranges(s, ranges, period) for k, s in all_series.items()}
        return DailyProfilePredictor(profiles)
    if arch == "arima":
        from .models import arima_fit

        end = max(b for _, b in ranges)
        params = {
            k: arima_fit(s.values[:end], max_history=max_history) for k, s in all_series.items()
        }
        return ArimaPredictor(params)
    raise ValueError(f"{arch!r} is not a baseline architecture")


_SWEEP_CTX: dict = {}


def _init_sweep_worker(ctx: dict) -> None:
    _SWEEP_CTX.update(ctx)


def _windows_for(all_series, split, r, p):
    start = next(iter(all_series.values())).start
    train = concat_windows(
        [make_windows(all_series, r, p, rg) for rg in split.train_ti_ranges(start)]
    )
    val = make_windows(all_series, r, p, split.validation_ti_range(start))
    test = make_windows(all_series, r, p, split.test_ti_range(start))
    return train, val, test


def _sweep_cell(task: tuple[int, int]) -> SweepCell:
    r, p = task
    ctx = _SWEEP_CTX
    arch: str = ctx["arch"]
    all_series = ctx["series"]
    split: SplitSpec = ctx["split"]
    repeats: int = ctx["repeats"]
    train_cfg: TrainConfig = ctx["train_config"]
    model_kwargs: dict = ctx["model_kwargs"]
    start = next(iter(all_series.values())).start

    if arch in ("dpp", "arima"):
        predictor = fit_baseline(arch, all_series, split)
        val_range = split.validation_ti_range(start)
        val = evaluate(predictor, all_series, val_range, r, p, dataset_name="validation")
        test_range = split.test_ti_range(start)
        test = evaluate(predictor, all_series, test_range, r, p, dataset_name="test")
        return SweepCell(
            arch=arch,
            past_horizon=r,
            lead=p,
            val_mean=val.rmse,
            val_std=0.0,
            test_mean=test.rmse,
            test_std=0.0,
            n_runs=1,
            n_diverged=0,
            seconds_mean=0.0,
        )

    train_w, val_w, test_w = _windows_for(all_series, split, r, p)
    normalizer = Normalizer.fit(train_w)
    ntrain, nval = normalizer.transform(train_w), normalizer.transform(val_w)
    ntest = normalizer.transform(test_w)
    cfg = ModelConfig(arch=arch, past_horizon=r, lead=p, **model_kwargs)
    n_stations = len(train_w.stations)
    seeds = [derive_seed(train_cfg.seed, r, p, i) for i in range(repeats)]
    result = train_repeated(
        lambda s: build_model(replace(cfg, seed=s), n_stations),
        ntrain,
        nval,
        train_cfg,
        normalizer=normalizer,
        k=repeats,
        seeds=seeds,
    )
    val_losses, test_losses, seconds = [], [], []
    diverged = 0
    for model, report in zip(result.models, result.reports):
        if report.diverged:
            diverged += 1
            continue
        val_losses.append(report.best_val_loss)
        test_losses.append(validation_rmse(model, ntest, normalizer))
        seconds.append(report.total_seconds)
    n_runs = len(val_losses)
    if n_runs == 0:
        return SweepCell(arch, r, p, math.nan, math.nan, math.nan, math.nan, 0, diverged, math.nan)
    return SweepCell(
        arch=arch,
        past_horizon=r,
        lead=p,
        val_mean=float(np.mean(val_losses)),
        val_std=float(np.std(val_losses)),
        test_mean=float(np.mean(test_losses)),
        test_std=float(np.std(test_losses)),
        n_runs=n_runs,
        n_diverged=diverged,
        seconds_mean=float(np.mean(seconds)),
    )


def sweep(
    arch: str,
    all_series: dict[str, FlowSeries],
    split: SplitSpec,
    past_horizons: list[int],
    leads: list[int],
    train_config: TrainConfig | None = None,
    model_kwargs: dict | None = None,
    repeats: int = 5,
    workers: int = 1,
) -> SweepResult:
    """Train/evaluate the full R x P grid and select best R per lead.

    Cells are independent; ``workers`` > 1 distributes them over a
    process pool.  A cell whose every repeat diverges is recorded as
    missing and skipped by the best-R selection.
    """
    if not past_horizons or not leads:
        raise ValueError("past_horizons and leads must be non-empty")
    ctx = {
        "arch": arch,
        "series": all_series,
        "split": split,
        "repeats": repeats,
        "train_config": train_config or TrainConfig(),
        "model_kwargs": model_kwargs or {},
    }
    tasks = [(r, p) for r in sorted(set(past_horizons)) for p in sorted(set(leads))]
    if workers > 1:
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_sweep_worker, initargs=(ctx,)
        ) as pool:
            cells = list(pool.map(_sweep_cell, tasks))
    else:
        _init_sweep_worker(ctx)
        try:
            cells = [_sweep_cell(t) for t in tasks]
        finally:
            _SWEEP_CTX.clear()
    return SweepResult(
        arch=arch,
        past_horizons=sorted(set(past_horizons)),
        leads=sorted(set(leads)),
        cells={(c.past_horizon, c.lead): c for c in cells},
    )


# ---------------------------------------------------------------------------
# Congestion map
# ---------------------------------------------------------------------------


def congestion_map(
    profiles: dict[str, DailyProfile], capacity: float, weekday: int = 0
) -> tuple[list[str], np.ndarray]:
    """Station x TI matrix of flow/capacity for one day of the week.

    Ratios are clipped to [0, 1]; cells with no profile data stay NaN.
    """
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    if not 0 <= weekday <= 6:
        raise ValueError("weekday must be 0 (Monday) .. 6 (Sunday)")
    stations = sorted(profiles)
    matrix = np.stack([profiles[k].mean[weekday] for k in stations]) / capacity
    return stations, np.clip(matrix, 0.0, 1.0)


# ---------------------------------------------------------------------------
# CSV and SVG exports
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path, header: list[str], rows) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_metrics_csv(path, reports: list[MetricReport]) -> None:
    _write_csv(
        path,
        ["model", "past_horizon", "lead", "dataset", "n_points", "rmse", "mae", "smape"],
        (
            [r.model, r.past_horizon, r.lead, r.dataset, r.n_points, r.rmse, r.mae, r.smape]
            for r in reports
        ),
    )


def write_station_metrics_csv(path, report: MetricReport) -> None:
    if report.per_station is None:
        raise ValueError("report has no per-station breakdown")
    _write_csv(
        path,
        ["station", "rmse"],
        ([sid, v] for sid, v in sorted(report.per_station.items())),
    )


def write_sweep_csv(path, result: SweepResult) -> None:
    _write_csv(
        path,
        [
            "arch",
            "past_horizon",
            "lead",
            "val_mean",
            "val_std",
            "test_mean",
            "test_std",
            "n_runs",
            "n_diverged",
            "seconds_mean",
        ],
        (
            [
                c.arch,
                c.past_horizon,
                c.lead,
                c.val_mean,
                c.val_std,
                c.test_mean,
                c.test_std,
                c.n_runs,
                c.n_diverged,
                c.seconds_mean,
            ]
            for _, c in sorted(result.cells.items())
        ),
    )


def write_best_table_csv(path, result: SweepResult) -> None:
    _write_csv(
        path,
        ["lead", "best_past_horizon", "val_mean", "test_mean"],
        (
            [row["lead"], row["best_past_horizon"], row["val_mean"], row["test_mean"]]
            for row in result.best_rows()
        ),
    )


def write_residuals_csv(path, rs: ResidualSeries) -> None:
    _write_csv(
        path,
        ["ti", "observed", "predicted", "residual"],
        (
            [i, rs.observed[i], rs.predicted[i], rs.predicted[i] - rs.observed[i]]
            for i in range(len(rs.observed))
        ),
    )


def write_congestion_csv(path, stations: list[str], matrix: np.ndarray) -> None:
    def rows():
        for i, sid in enumerate(stations):
            for t in range(matrix.shape[1]):
                yield [sid, t, matrix[i, t]]

    _write_csv(path, ["station", "ti", "ratio"], rows())


def _mpl():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "flowcast"
    import matplotlib.pyplot as plt

    return plt


def _save_svg(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_residuals(path, rs: ResidualSeries) -> None:
    plt = _mpl()
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(10, 6), sharex=True)
    hours = np.arange(len(rs.observed)) * 3 / 60
    top.plot(hours, rs.observed, label="observed", lw=1.0)
    top.plot(hours, rs.predicted, label="predicted", lw=1.0)
    top.set_ylabel("flow (veh / 3 min)")
    top.set_title(f"{rs.station} on {rs.day.isoformat()}")
    top.legend()
    bottom.plot(hours, rs.residual, lw=0.8, color="crimson")
    bottom.axhline(0.0, color="black", lw=0.5)
    bottom.set_xlabel("hour of day")
    bottom.set_ylabel("residual")
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def plot_model_comparison(path, reports: list[MetricReport]) -> None:
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    names = [r.model for r in reports]
    ax.bar(names, [r.rmse for r in reports], color="steelblue")
    ax.set_ylabel("test RMSE (veh / 3 min)")
    ax.set_title(f"lead={reports[0].lead if reports else '?'}")
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def plot_sweep_heatmap(path, result: SweepResult, which: str = "val_mean") -> None:
    plt = _mpl()
    grid = np.full((len(result.past_horizons), len(result.leads)), np.nan)
    for (r, p), c in result.cells.items():
        grid[result.past_horizons.index(r), result.leads.index(p)] = getattr(c, which)
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(grid, aspect="auto", origin="lower", cmap="viridis")
    ax.set_xticks(range(len(result.leads)), [str(p) for p in result.leads])
    ax.set_yticks(range(len(result.past_horizons)), [str(r) for r in result.past_horizons])
    ax.set_xlabel("prediction horizon (TIs ahead)")
    ax.set_ylabel("past horizon (TIs)")
    ax.set_title(f"{result.arch}: {which}")
    fig.colorbar(im, ax=ax, label="RMSE")
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def plot_congestion(path, stations: list[str], matrix: np.ndarray) -> None:
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(10, 0.28 * len(stations) + 1.5))
    im = ax.imshow(matrix, aspect="auto", vmin=0.0, vmax=1.0, cmap="RdYlGn_r")
    ax.set_yticks(range(len(stations)), stations, fontsize=6)
    ax.set_xlabel("TI of day")
    ax.set_title("flow / capacity")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)
