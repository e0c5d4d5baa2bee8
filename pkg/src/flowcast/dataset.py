"""Sliding-window samples, date-range splits, and normalization.

A sample pairs the recent past of the whole network with one future
instant: the input is an N x R matrix (one row per station, one column
per TI, ending at the anchor TI t) and the target is the N-vector of
flows at TI t+P.  A contiguous stretch of n TIs yields exactly
n - R - P + 1 samples; windows containing any masked value are dropped.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from datetime import date, datetime, timedelta

import numpy as np

from .series import FlowSeries, StationId, date_range_to_ti, ensure_aligned


@dataclass(frozen=True)
class WindowSample:
    input: np.ndarray
    target: np.ndarray
    anchor: int


@dataclass
class WindowSet:
    """Batched window samples: inputs (B, N, R), targets (B, N), anchors (B,)."""

    inputs: np.ndarray
    targets: np.ndarray
    anchors: np.ndarray
    stations: list[str]
    past_horizon: int
    lead: int

    def __post_init__(self):
        b, n_st, r = self.inputs.shape
        if self.targets.shape != (b, n_st) or self.anchors.shape != (b,):
            raise ValueError("inputs, targets and anchors disagree on batch size")
        if r != self.past_horizon or n_st != len(self.stations):
            raise ValueError("window shape does not match past_horizon/stations")

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def __getitem__(self, i: int) -> WindowSample:
        return WindowSample(self.inputs[i], self.targets[i], int(self.anchors[i]))


def station_order(all_series: dict[str, FlowSeries]) -> list[str]:
    """Canonical station ordering used for every matrix in the workbench."""
    return [s.render() for s in sorted(StationId.parse(k) for k in all_series)]


def stack_series(all_series: dict[str, FlowSeries]) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Align series into (n, N) value and missing matrices, canonical column order."""
    ensure_aligned(list(all_series.values()))
    order = station_order(all_series)
    values = np.stack([all_series[k].values for k in order], axis=1)
    missing = np.stack([all_series[k].missing for k in order], axis=1)
    return values, missing, order


def make_windows(
    all_series: dict[str, FlowSeries],
    past_horizon: int,
    lead: int,
    ti_range: tuple[int, int] | None = None,
) -> WindowSet:
    """Slide over one contiguous TI range and emit every complete sample.

    The anchor t is the last input TI; inputs cover t-R+1..t and the
    target sits at t+P.  Anchors are global TI indices into the source
    series, ordered increasingly.  Samples touching a masked value at any
    station are skipped.
    """
    if past_horizon < 1 or lead < 1:
        raise ValueError("past_horizon and lead must be at least 1")
    values, missing, order = stack_series(all_series)
    a, b = ti_range if ti_range is not None else (0, values.shape[0])
    if not 0 <= a <= b <= values.shape[0]:
        raise ValueError(f"TI range [{a}, {b}) outside data of length {values.shape[0]}")
    n = b - a
    r, p = past_horizon, lead

    count = n - r - p + 1
    if count <= 0:
        warnings.warn(
            f"range of {n} TIs is too short for past_horizon={r} plus lead={p}; no samples",
            stacklevel=2,
        )
        return WindowSet(
            inputs=np.empty((0, len(order), r)),
            targets=np.empty((0, len(order))),
            anchors=np.empty((0,), dtype=np.int64),
            stations=order,
            past_horizon=r,
            lead=p,
        )

    anchors = np.arange(a + r - 1, b - p, dtype=np.int64)
    bad = missing.any(axis=1)
    bad_cum = np.concatenate(([0], np.cumsum(bad)))
    input_clean = bad_cum[anchors + 1] - bad_cum[anchors + 1 - r] == 0
    keep = input_clean & ~bad[anchors + p]
    anchors = anchors[keep]

    idx = anchors[:, None] + np.arange(-r + 1, 1)[None, :]
    inputs = values[idx].transpose(0, 2, 1)  # (B, R, N) -> (B, N, R)
    targets = values[anchors + p]
    return WindowSet(
        inputs=np.ascontiguousarray(inputs),
        targets=targets.copy(),
        anchors=anchors,
        stations=order,
        past_horizon=r,
        lead=p,
    )


def concat_windows(parts: list[WindowSet]) -> WindowSet:
    """Concatenate window sets from disjoint ranges (same stations, R and P)."""
    if not parts:
        raise ValueError("nothing to concatenate")
    head = parts[0]
    for w in parts[1:]:
        if (
            w.stations != head.stations
            or w.past_horizon != head.past_horizon
            or w.lead != head.lead
        ):
            raise ValueError("window sets are not compatible")
    return WindowSet(
        inputs=np.concatenate([w.inputs for w in parts]),
        targets=np.concatenate([w.targets for w in parts]),
        anchors=np.concatenate([w.anchors for w in parts]),
        stations=head.stations,
        past_horizon=head.past_horizon,
        lead=head.lead,
    )


# ---------------------------------------------------------------------------
# Date-range split
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DateRange:
    """Inclusive calendar date range."""

    first: date
    last: date

    def __post_init__(self):
        if self.last < self.first:
            raise ValueError(f"range end {self.last} precedes start {self.first}")

    def overlaps(self, other: "DateRange") -> bool:
        return self.first <= other.last and other.first <= self.last

    def subtract(self, cut: "DateRange") -> list["DateRange"]:
        """Remove ``cut``, returning the zero, one or two remaining pieces."""
        if not self.overlaps(cut):
            return [self]
        pieces = []
        if cut.first > self.first:
            pieces.append(DateRange(self.first, cut.first - timedelta(days=1)))
        if cut.last < self.last:
            pieces.append(DateRange(cut.last + timedelta(days=1), self.last))
        return pieces

    @classmethod
    def parse(cls, pair) -> "DateRange":
        return cls(date.fromisoformat(pair[0]), date.fromisoformat(pair[1]))

    def render(self) -> list[str]:
        return [self.first.isoformat(), self.last.isoformat()]


@dataclass(frozen=True)
class SplitSpec:
    """Training (possibly several disjoint stretches), validation and test ranges."""

    train: tuple[DateRange, ...]
    validation: DateRange
    test: DateRange

    def __post_init__(self):
        ranges = list(self.train) + [self.validation, self.test]
        for i, x in enumerate(ranges):
            for y in ranges[i + 1 :]:
                if x.overlaps(y):
                    raise ValueError(f"split ranges overlap: {x} and {y}")

    def exclude(self, cut: DateRange) -> "SplitSpec":
        """Drop a date range (e.g. a faulty period) from the training stretches."""
        if cut.overlaps(self.validation) or cut.overlaps(self.test):
            raise ValueError("cannot exclude dates from the validation or test range")
        train = tuple(piece for r in self.train for piece in r.subtract(cut))
        if not train:
            raise ValueError("exclusion removes all training data")
        return SplitSpec(train=train, validation=self.validation, test=self.test)

    def to_json(self) -> dict:
        return {
            "train": [r.render() for r in self.train],
            "validation": self.validation.render(),
            "test": self.test.render(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SplitSpec":
        return cls(
            train=tuple(DateRange.parse(r) for r in obj["train"]),
            validation=DateRange.parse(obj["validation"]),
            test=DateRange.parse(obj["test"]),
        )

    def train_ti_ranges(self, start: datetime) -> list[tuple[int, int]]:
        return [date_range_to_ti(start, r.first, r.last) for r in self.train]

    def validation_ti_range(self, start: datetime) -> tuple[int, int]:
        return date_range_to_ti(start, self.validation.first, self.validation.last)

    def test_ti_range(self, start: datetime) -> tuple[int, int]:
        return date_range_to_ti(start, self.test.first, self.test.last)


def weekly_split(start: date, train_weeks: int, val_weeks: int = 1, test_weeks: int = 1) -> SplitSpec:
    """Consecutive whole-week split starting at ``start``."""

    def block(first_week: int, weeks: int) -> DateRange:
        first = start + timedelta(weeks=first_week)
        return DateRange(first, first + timedelta(weeks=weeks) - timedelta(days=1))

    return SplitSpec(
        train=(block(0, train_weeks),),
        validation=block(train_weeks, val_weeks),
        test=block(train_weeks + val_weeks, test_weeks),
    )


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


@dataclass
class Normalizer:
    """Per-station affine scaling to zero mean and unit variance.

    Statistics are fitted on training inputs only.  Stations with zero
    variance keep scale 1 so the transform stays invertible.
    """

    stations: list[str]
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, windows: WindowSet) -> "Normalizer":
        if len(windows) == 0:
            raise ValueError("cannot fit a normalizer on an empty window set")
        cells = windows.inputs.transpose(1, 0, 2).reshape(len(windows.stations), -1)
        mean = cells.mean(axis=1)
        scale = cells.std(axis=1)
        scale[scale == 0.0] = 1.0
        return cls(stations=list(windows.stations), mean=mean, scale=scale)

    def transform(self, windows: WindowSet) -> WindowSet:
        if windows.stations != self.stations:
            raise ValueError("window set stations do not match normalizer")
        inputs = (windows.inputs - self.mean[:, None]) / self.scale[:, None]
        targets = (windows.targets - self.mean) / self.scale
        return replace(windows, inputs=inputs, targets=targets)

    def inverse(self, arr: np.ndarray) -> np.ndarray:
        """Map normalized values with trailing station axis back to flows."""
        return arr * self.scale + self.mean

    def to_json(self) -> dict:
        return {
            "stations": self.stations,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Normalizer":
        return cls(
            stations=list(obj["stations"]),
            mean=np.asarray(obj["mean"], dtype=np.float64),
            scale=np.asarray(obj["scale"], dtype=np.float64),
        )


def iter_batches(
    windows: WindowSet,
    batch_size: int,
    rng: np.random.Generator | None = None,
    shuffle: bool = True,
):
    """Yield (inputs, targets) mini-batches; order is seeded via ``rng``."""
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    order = np.arange(len(windows))
    if shuffle:
        if rng is None:
            raise ValueError("shuffling requires an explicit rng for reproducibility")
        order = rng.permutation(len(windows))
    for at in range(0, len(order), batch_size):
        sel = order[at : at + batch_size]
        yield windows.inputs[sel], windows.targets[sel]
