"""Vehicle-count series on the 3-minute recording grid.

All flow data in the workbench is a per-station sequence of counts, one
value per 3-minute time interval (TI), 480 TIs per day.  A missing mask
rides along with the values: masked intervals are recorded as a flow of
zero, which is how faulty detectors show up in the raw data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

import numpy as np

TI_MINUTES = 3
TIS_PER_DAY = 24 * 60 // TI_MINUTES  # 480

_KINDS = ("A", "B", "E", "X")


class AlignmentError(ValueError):
    """Raised when series do not share the same time grid."""


@dataclass(frozen=True, order=True)
class StationId:
    """A counting station: mainline (A south-bound / B north-bound), entry (E) or exit (X)."""

    index: int
    kind: str

    def __post_init__(self):
        if self.index <= 0:
            raise ValueError(f"station index must be positive, got {self.index}")
        if self.kind not in _KINDS:
            raise ValueError(f"station kind must be one of {_KINDS}, got {self.kind!r}")

    def render(self) -> str:
        return f"{self.index:02d}{self.kind}"

    def __str__(self) -> str:
        return self.render()

    @classmethod
    def parse(cls, text: str) -> "StationId":
        text = text.strip()
        if len(text) < 2 or text[-1] not in _KINDS or not text[:-1].isdigit():
            raise ValueError(f"not a station id: {text!r}")
        return cls(index=int(text[:-1]), kind=text[-1])


def is_grid_aligned(ts: datetime) -> bool:
    return ts.second == 0 and ts.microsecond == 0 and ts.minute % TI_MINUTES == 0


@dataclass
class FlowSeries:
    """Flow counts for one station, one value per TI starting at ``start``.

    Values flagged in ``missing`` are stored as 0.0, mirroring how detector
    outages appear in real recordings.
    """

    station: StationId
    start: datetime
    values: np.ndarray
    missing: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if self.missing is None:
            self.missing = np.zeros(self.values.shape, dtype=bool)
        self.missing = np.asarray(self.missing, dtype=bool)
        if self.missing.shape != self.values.shape:
            raise ValueError("missing mask must match values length")
        if not is_grid_aligned(self.start):
            raise AlignmentError(f"start {self.start} is not on the {TI_MINUTES}-min grid")
        if np.any(self.values < 0):
            raise ValueError("flow counts cannot be negative")
        # Masked intervals are recorded as zero by definition.
        self.values = np.where(self.missing, 0.0, self.values)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> datetime:
        """Timestamp one TI past the last value."""
        return self.start + timedelta(minutes=TI_MINUTES * len(self))

    def timestamp(self, i: int) -> datetime:
        return self.start + timedelta(minutes=TI_MINUTES * i)

    def ti_index(self, ts: datetime) -> int:
        delta = ts - self.start
        minutes = delta.total_seconds() / 60.0
        idx = minutes / TI_MINUTES
        if idx != int(idx):
            raise AlignmentError(f"{ts} is not on this series' grid")
        return int(idx)

    def ti_of_day(self) -> np.ndarray:
        """TI-of-day index (0..479) for every sample."""
        offset = (self.start.hour * 60 + self.start.minute) // TI_MINUTES
        return (offset + np.arange(len(self))) % TIS_PER_DAY

    def day_of_week(self) -> np.ndarray:
        """Python weekday (Mon=0) for every sample."""
        offset = (self.start.hour * 60 + self.start.minute) // TI_MINUTES
        day_index = (offset + np.arange(len(self))) // TIS_PER_DAY
        first = self.start.date().weekday()
        return (first + day_index) % 7

    def dates(self) -> np.ndarray:
        """Calendar date of every sample."""
        offset = (self.start.hour * 60 + self.start.minute) // TI_MINUTES
        day_index = (offset + np.arange(len(self))) // TIS_PER_DAY
        base = self.start.date()
        uniq = np.array([base + timedelta(days=int(d)) for d in range(int(day_index[-1]) + 1 if len(self) else 0)])
        return uniq[day_index]

    def copy(self) -> "FlowSeries":
        return FlowSeries(self.station, self.start, self.values.copy(), self.missing.copy())


def ensure_aligned(series: list[FlowSeries]) -> None:
    """Raise AlignmentError unless all series share start and length."""
    if not series:
        return
    first = series[0]
    for s in series[1:]:
        if s.start != first.start or len(s) != len(first):
            raise AlignmentError(
                f"series {s.station} ({s.start}, n={len(s)}) is not aligned with "
                f"{first.station} ({first.start}, n={len(first)})"
            )


def date_range_to_ti(start_of_data: datetime, first: date, last: date) -> tuple[int, int]:
    """Convert an inclusive calendar date range to a half-open TI index range."""
    if last < first:
        raise ValueError(f"date range end {last} precedes start {first}")
    a = (datetime(first.year, first.month, first.day) - start_of_data).total_seconds() / 60 / TI_MINUTES
    b = (datetime(last.year, last.month, last.day) + timedelta(days=1) - start_of_data).total_seconds() / 60 / TI_MINUTES
    if a != int(a) or b != int(b):
        raise AlignmentError("date range does not fall on the TI grid")
    return int(a), int(b)


# ---------------------------------------------------------------------------
# CSV interchange format: columns timestamp, station, flow, missing (0/1).
# ---------------------------------------------------------------------------

CSV_HEADER = ["timestamp", "station", "flow", "missing"]


def write_csv(path, series: list[FlowSeries]) -> None:
    """Write series in the long interchange format, stations sorted, time-major."""
    ensure_aligned(series)
    ordered = sorted(series, key=lambda s: s.station.render())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        if not ordered:
            return
        n = len(ordered[0])
        start = ordered[0].start
        for i in range(n):
            ts = (start + timedelta(minutes=TI_MINUTES * i)).isoformat(sep=" ")
            for s in ordered:
                # repr gives the shortest decimal that parses back bit-exact.
                writer.writerow([ts, s.station.render(), repr(float(s.values[i])), int(s.missing[i])])


def read_csv(path) -> dict[str, FlowSeries]:
    """Read the long interchange format back into per-station series."""
    stations: dict[str, list[float]] = {}
    masks: dict[str, list[bool]] = {}
    starts: dict[str, datetime] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r} in {path}")
        for row in reader:
            ts, sid, flow, miss = row
            if sid not in stations:
                stations[sid] = []
                masks[sid] = []
                starts[sid] = datetime.fromisoformat(ts)
            stations[sid].append(float(flow))
            masks[sid].append(miss == "1")
    out = {}
    for sid, vals in stations.items():
        out[sid] = FlowSeries(StationId.parse(sid), starts[sid], np.array(vals), np.array(masks[sid]))
    ensure_aligned(list(out.values()))
    return out
