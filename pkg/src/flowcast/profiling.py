"""Daily flow profiles, missing-data detection, and imputation.

A daily profile summarizes a station by day-of-week and time-of-day:
for each of the 7x480 cells it holds the mean flow plus the empirical
20th and 80th percentiles over the source period.

Dead detectors record a flow of zero.  A zero is only treated as
missing when the station's topological neighbours carry substantial
flow at the same interval; a network-wide quiet night stays untouched.
Missing values are filled with the mean over the same day of the week
and TI across all weeks of the same calendar month.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from datetime import date

import numpy as np

from .series import TIS_PER_DAY, FlowSeries, StationId, date_range_to_ti, ensure_aligned
from .topology import Topology


@dataclass(frozen=True)
class MissingRun:
    """A contiguous stretch of missing data at one station."""

    station: str
    start: int
    length: int
    reason: str = ""

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("a missing run spans at least one TI")

    @property
    def stop(self) -> int:
        return self.start + self.length


def runs_from_mask(station: str, mask: np.ndarray, reason: str = "") -> list[MissingRun]:
    """Contiguous True stretches of ``mask`` as non-overlapping runs."""
    edges = np.flatnonzero(np.diff(np.concatenate(([False], mask.astype(bool), [False]))))
    return [
        MissingRun(station=station, start=int(a), length=int(b - a), reason=reason)
        for a, b in zip(edges[::2], edges[1::2])
    ]


def mask_from_runs(n: int, runs: list[MissingRun]) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    for r in runs:
        mask[r.start : r.stop] = True
    return mask


@dataclass
class DailyProfile:
    """Per (day-of-week, TI) statistics of one station's flow.

    Cells with no samples hold NaN and are flagged by ``empty``; they are
    never silently reported as zero flow.
    """

    station: StationId
    period: tuple[date, date]
    mean: np.ndarray
    p20: np.ndarray
    p80: np.ndarray
    count: np.ndarray

    def __post_init__(self):
        for name in ("mean", "p20", "p80", "count"):
            arr = getattr(self, name)
            if arr.shape != (7, TIS_PER_DAY):
                raise ValueError(f"{name} must have shape (7, {TIS_PER_DAY}), got {arr.shape}")

    @property
    def empty(self) -> np.ndarray:
        return self.count == 0

    def lookup(self, weekday: np.ndarray, ti: np.ndarray) -> np.ndarray:
        """Mean-flow values for arrays of (weekday, TI-of-day) pairs."""
        return self.mean[np.asarray(weekday), np.asarray(ti)]


def build_profile(s: FlowSeries, period: tuple[date, date] | None = None) -> DailyProfile:
    """Aggregate one station's flow into a daily profile over ``period``.

    ``period`` is an inclusive date range and must cover at least one full
    week; missing-masked samples are excluded from every statistic.
    """
    if period is None:
        first = s.start.date()
        last = (s.timestamp(len(s) - 1)).date()
        period = (first, last)
    first, last = period
    if (last - first).days + 1 < 7:
        raise ValueError("profile period must cover at least one full week")
    a, b = date_range_to_ti(s.start, first, last)
    a, b = max(a, 0), min(b, len(s))
    if a >= b:
        raise ValueError("profile period does not overlap the series")

    weekday = s.day_of_week()[a:b]
    ti = s.ti_of_day()[a:b]
    values = s.values[a:b]
    keep = ~s.missing[a:b]

    mean = np.full((7, TIS_PER_DAY), np.nan)
    p20 = np.full((7, TIS_PER_DAY), np.nan)
    p80 = np.full((7, TIS_PER_DAY), np.nan)
    count = np.zeros((7, TIS_PER_DAY), dtype=np.int64)

    cell = weekday * TIS_PER_DAY + ti
    order = np.argsort(cell[keep], kind="stable")
    sorted_cells = cell[keep][order]
    sorted_vals = values[keep][order]
    bounds = np.searchsorted(sorted_cells, np.arange(7 * TIS_PER_DAY + 1))
    for c in range(7 * TIS_PER_DAY):
        lo, hi = bounds[c], bounds[c + 1]
        if lo == hi:
            continue
        d, i = divmod(c, TIS_PER_DAY)
        chunk = sorted_vals[lo:hi]
        mean[d, i] = chunk.mean()
        p20[d, i], p80[d, i] = np.percentile(chunk, [20, 80])
        count[d, i] = hi - lo
    return DailyProfile(station=s.station, period=period, mean=mean, p20=p20, p80=p80, count=count)


def detect_missing(
    all_series: dict[str, FlowSeries], topo: Topology, threshold: float = 10.0
) -> list[MissingRun]:
    """Flag zero readings where topological neighbours carry real flow.

    A cell is flagged when the station reads zero while the mean flow of
    its adjacent stations is at least ``threshold`` vehicles per TI, so a
    genuinely quiet network (every station near zero) raises nothing.
    """
    ensure_aligned(list(all_series.values()))
    neighbours: dict[str, set[str]] = defaultdict(set)
    for ln in topo.links:
        pair = [ln.upstream.render(), ln.downstream.render()]
        if ln.ramp is not None:
            pair.append(ln.ramp.render())
        for sid in pair:
            neighbours[sid].update(p for p in pair if p != sid)

    runs: list[MissingRun] = []
    for sid in sorted(all_series):
        s = all_series[sid]
        others = sorted(neighbours.get(sid, ()))
        if not others:
            continue
        neighbour_mean = np.mean([all_series[o].values for o in others], axis=0)
        flagged = (s.values == 0) & (neighbour_mean >= threshold)
        runs.extend(runs_from_mask(sid, flagged, reason="zero-with-neighbour-flow"))
    return runs


def monthly_missing_counts(all_series: dict[str, FlowSeries]) -> dict[tuple[int, int], int]:
    """Total masked TIs per calendar (year, month), summed over stations."""
    counts: dict[tuple[int, int], int] = defaultdict(int)
    for s in all_series.values():
        if not s.missing.any():
            continue
        dates = s.dates()
        for d in dates[s.missing]:
            counts[(d.year, d.month)] += 1
    return dict(sorted(counts.items()))


@dataclass
class ImputationResult:
    series: FlowSeries
    filled: int
    unimputable: list[MissingRun]


def impute(
    s: FlowSeries,
    runs: list[MissingRun] | None = None,
    period: tuple[date, date] | None = None,
) -> ImputationResult:
    """Fill missing values with same-month, same-weekday, same-TI means.

    The donors for a missing Monday 14:00 cell in April are the non-missing
    14:00 readings of all other Mondays of that April (optionally further
    restricted to ``period``).  Filled cells have their mask cleared; cells
    with no donors at all are left masked and reported back.
    """
    mask = s.missing.copy()
    for r in runs or []:
        if r.station == s.station.render():
            mask[r.start : r.stop] = True
    if not mask.any():
        return ImputationResult(series=s.copy(), filled=0, unimputable=[])

    dates = s.dates()
    weekday = s.day_of_week()
    ti = s.ti_of_day()
    eligible = ~mask
    if period is not None:
        a, b = date_range_to_ti(s.start, period[0], period[1])
        in_period = np.zeros(len(s), dtype=bool)
        in_period[max(a, 0) : min(b, len(s))] = True
        eligible &= in_period

    donors: dict[tuple, list[int]] = defaultdict(list)
    for idx in np.flatnonzero(eligible):
        d = dates[idx]
        donors[(d.year, d.month, int(weekday[idx]), int(ti[idx]))].append(idx)

    values = np.where(mask, 0.0, s.values)
    new_mask = mask.copy()
    for idx in np.flatnonzero(mask):
        d = dates[idx]
        pool = donors.get((d.year, d.month, int(weekday[idx]), int(ti[idx])))
        if pool:
            values[idx] = s.values[pool].mean()
            new_mask[idx] = False

    out = FlowSeries(s.station, s.start, values, new_mask)
    filled = int(mask.sum() - new_mask.sum())
    leftovers = runs_from_mask(s.station.render(), new_mask, reason="unimputable")
    return ImputationResult(series=out, filled=filled, unimputable=leftovers)
