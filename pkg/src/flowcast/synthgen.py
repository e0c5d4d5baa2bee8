"""Deterministic synthetic motorway data with exact flow conservation.

The generator produces two layers per station:

* ``noiseless``: the underlying flow, built by propagating a source
  inflow along each direction's chain (exits remove a fraction of the
  current flow, entries add their own flow).  All values are quantized
  to a fixed binary grid so that the conservation identities hold to
  the last bit, not just to rounding error.
* ``measured``: what the detectors record, i.e. the noiseless flow with
  multiplicative log-normal measurement noise, rounded to whole
  vehicles.

Demand is not a frozen daily curve.  Each day draws a log-normal
amplitude factor and each direction carries a slowly mixing AR(1)
log-level, so the recent past holds real information about the near
future and purely profile-based prediction is beatable.  Entry ramps
get their own faster-mixing AR(1) on top.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date, datetime, timedelta

import numpy as np

from .profiling import MissingRun, runs_from_mask
from .series import TI_MINUTES, TIS_PER_DAY, FlowSeries, StationId
from .topology import Link, Topology

# Flow values are kept on this grid (2^-20) so chain sums are exact.
_GRID = float(2**20)


def _quantize(x: np.ndarray) -> np.ndarray:
    return np.round(x * _GRID) / _GRID


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs of the synthetic network and its demand process.

    Flow amplitudes are vehicles per 3-minute interval.  ``noise_sigma``
    is the measurement noise standard deviation at the reference
    amplitude (weekday floor plus evening peak); noise scales
    proportionally with flow.
    """

    n_mainline: int = 10
    days: int = 70
    start: date = date(2024, 3, 4)  # a Monday
    seed: int = 0
    noise_sigma: float = 12.0
    day_factor_sigma: float = 0.06
    level_sigma: float = 0.06
    level_tau_minutes: float = 45.0
    entry_tau_minutes: float = 15.0
    exit_fraction: float = 0.2
    entry_fraction: float = 0.25
    capacity: float = 400.0
    holidays: tuple[date, ...] = ()
    weekday_floor: float = 40.0
    weekday_am_peak: float = 260.0
    weekday_pm_peak: float = 300.0
    weekend_floor: float = 30.0
    weekend_peak: float = 120.0
    # Mon..Sun multipliers on the daily shape.
    weekday_scale: tuple[float, ...] = (1.00, 1.02, 1.03, 1.04, 1.10, 1.00, 0.85)

    def __post_init__(self):
        if self.n_mainline < 8:
            raise ValueError("need at least 8 mainline stations per direction")
        if self.days < 1:
            raise ValueError("need at least one day")
        if not 0.0 < self.exit_fraction < 1.0:
            raise ValueError("exit_fraction must be in (0, 1)")
        if self.entry_fraction < 0.0:
            raise ValueError("entry_fraction cannot be negative")

    @property
    def reference_amplitude(self) -> float:
        return self.weekday_floor + self.weekday_pm_peak

    @property
    def start_datetime(self) -> datetime:
        return datetime(self.start.year, self.start.month, self.start.day)


@dataclass
class SyntheticDataset:
    config: GeneratorConfig
    topology: Topology
    noiseless: dict[str, FlowSeries]
    measured: dict[str, FlowSeries]
    injected: list[MissingRun] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.config.days * TIS_PER_DAY

    @property
    def stations(self) -> list[str]:
        return [s.render() for s in self.topology.stations()]


def simple_topology(n_mainline: int = 10) -> Topology:
    """Two opposite chains of ``n_mainline`` stations, one exit and one entry each.

    Direction A drives from high indices to low, direction B the other
    way.  Ramp positions are spread so that all station ids stay unique.
    """
    if n_mainline < 8:
        raise ValueError("need at least 8 mainline stations per direction")
    m = n_mainline
    exit_a = (m - 1) // 4
    entry_a = (m - 1) // 2 + 1
    exit_b = (m - 1) - 1 - (m - 1) // 4
    entry_b = (m - 1) // 3

    links = []
    for j in range(m - 1):
        up, down = StationId(m - j, "A"), StationId(m - j - 1, "A")
        ramp = None
        if j == exit_a:
            ramp = StationId(down.index, "X")
        elif j == entry_a:
            ramp = StationId(up.index, "E")
        links.append(Link(up, down, ramp))
    for j in range(m - 1):
        up, down = StationId(j + 1, "B"), StationId(j + 2, "B")
        ramp = None
        if j == exit_b:
            ramp = StationId(down.index, "X")
        elif j == entry_b:
            ramp = StationId(up.index, "E")
        links.append(Link(up, down, ramp))
    return Topology(name=f"simple-{m}", links=links)


def _daily_shape(cfg: GeneratorConfig, day: date, direction: str) -> np.ndarray:
    """Expected source inflow for one calendar day, per TI."""
    hours = np.arange(TIS_PER_DAY) * TI_MINUTES / 60.0
    weekday = day.weekday()
    offday = weekday >= 5 or day in cfg.holidays
    if offday:
        shape = cfg.weekend_floor + cfg.weekend_peak * np.exp(-0.5 * ((hours - 13.5) / 2.5) ** 2)
        scale = cfg.weekday_scale[weekday] if weekday >= 5 else cfg.weekday_scale[6]
    else:
        am, pm = cfg.weekday_am_peak, cfg.weekday_pm_peak
        if direction == "B":
            # Opposite commute: the heavy peak is in the morning.
            am, pm = pm, am
        shape = (
            cfg.weekday_floor
            + am * np.exp(-0.5 * ((hours - 8.5) / 1.0) ** 2)
            + pm * np.exp(-0.5 * ((hours - 17.5) / 1.25) ** 2)
        )
        scale = cfg.weekday_scale[weekday]
    return scale * shape


def _ar1(rng: np.random.Generator, n: int, sigma: float, tau_minutes: float) -> np.ndarray:
    """Stationary AR(1) with marginal std ``sigma`` and correlation time ``tau``."""
    alpha = float(np.exp(-TI_MINUTES / tau_minutes))
    innov = rng.standard_normal(n)
    out = np.empty(n)
    out[0] = sigma * innov[0]
    step = sigma * np.sqrt(1.0 - alpha * alpha)
    for t in range(1, n):
        out[t] = alpha * out[t - 1] + step * innov[t]
    return out


def generate(cfg: GeneratorConfig, topo: Topology | None = None) -> SyntheticDataset:
    """Produce noiseless and measured series for every station of the topology."""
    if topo is None:
        topo = simple_topology(cfg.n_mainline)
    rng = np.random.default_rng(cfg.seed)
    n = cfg.days * TIS_PER_DAY
    start = cfg.start_datetime
    dates = [cfg.start + timedelta(days=d) for d in range(cfg.days)]

    noiseless: dict[str, np.ndarray] = {}
    for direction in topo.directions():
        base = np.concatenate([_daily_shape(cfg, d, direction) for d in dates])
        day_factor = np.exp(cfg.day_factor_sigma * rng.standard_normal(cfg.days))
        day_factor = np.repeat(day_factor, TIS_PER_DAY)
        level = np.exp(_ar1(rng, n, cfg.level_sigma, cfg.level_tau_minutes))
        flow = _quantize(base * day_factor * level)

        chain = topo.chain(direction)
        if not chain:
            continue
        noiseless[chain[0].upstream.render()] = flow
        for link in chain:
            if link.kind == "plain":
                down = flow
            elif link.kind == "exit":
                ramp = _quantize(cfg.exit_fraction * flow)
                noiseless[link.ramp.render()] = ramp
                down = flow - ramp
            else:
                drift = np.exp(_ar1(rng, n, cfg.level_sigma, cfg.entry_tau_minutes))
                ramp = _quantize(cfg.entry_fraction * base * day_factor * drift)
                noiseless[link.ramp.render()] = ramp
                down = flow + ramp
            noiseless[link.downstream.render()] = down
            flow = down

    rel_noise = cfg.noise_sigma / cfg.reference_amplitude
    clean_series: dict[str, FlowSeries] = {}
    measured_series: dict[str, FlowSeries] = {}
    for sid in topo.stations():
        key = sid.render()
        values = noiseless[key]
        if cfg.noise_sigma > 0:
            counts = np.round(values * np.exp(rel_noise * rng.standard_normal(n)))
        else:
            # A perfect detector reports the ground truth; rounding would
            # break exact conservation of the sigma=0 output.
            counts = values.copy()
        clean_series[key] = FlowSeries(sid, start, values)
        measured_series[key] = FlowSeries(sid, start, counts)

    return SyntheticDataset(config=cfg, topology=topo, noiseless=clean_series, measured=measured_series)


def inject_missing(
    ds: SyntheticDataset,
    fraction: float = 0.01,
    seed: int = 1,
    min_run: int = 1,
    max_run: int = 20,
) -> SyntheticDataset:
    """Return a copy of ``ds`` with detector outages injected into the measured data.

    Outages are contiguous runs of random length, drawn per station until
    roughly ``fraction`` of that station's cells are masked.  Masked cells
    read as zero, the way a dead detector does.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    if not 1 <= min_run <= max_run:
        raise ValueError("need 1 <= min_run <= max_run")
    rng = np.random.default_rng(seed)
    n = ds.n
    measured: dict[str, FlowSeries] = {}
    runs: list[MissingRun] = []
    for key in ds.stations:
        s = ds.measured[key]
        mask = s.missing.copy()
        # Cap at the cells still unmasked so fraction=1 terminates.
        target = min(int(round(fraction * n)), n - int(s.missing.sum()))
        while int(mask.sum()) - int(s.missing.sum()) < target:
            at = int(rng.integers(0, n))
            length = int(rng.integers(min_run, max_run + 1))
            mask[at : at + length] = True
        measured[key] = FlowSeries(s.station, s.start, s.values, mask)
        runs.extend(runs_from_mask(key, mask & ~s.missing, reason="injected"))
    return replace(ds, measured=measured, injected=list(ds.injected) + runs)
