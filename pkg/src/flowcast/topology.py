"""Motorway station graph and flow-conservation checks.

The network is two independent chains of mainline counting stations, one
per driving direction (A and B).  Between two consecutive mainline
stations there is at most one ramp, either an entry (E) or an exit (X),
itself equipped with a counting station.

Over any time interval the vehicle counts must balance:

* plain link:  downstream = upstream
* exit link:   upstream   = downstream + exit
* entry link:  downstream = upstream + entry

Real recordings violate these only within measurement noise, so every
check takes a tolerance ``epsilon``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .series import FlowSeries, StationId


@dataclass(frozen=True)
class Link:
    """Directed road segment between consecutive mainline stations.

    ``ramp`` is the entry or exit station located on the segment, if any.
    By convention an exit ramp carries the index of the downstream
    mainline station and an entry ramp the index of the upstream one.
    """

    upstream: StationId
    downstream: StationId
    ramp: StationId | None = None

    def __post_init__(self):
        if self.upstream.kind not in ("A", "B") or self.downstream.kind not in ("A", "B"):
            raise ValueError("link endpoints must be mainline stations")
        if self.upstream.kind != self.downstream.kind:
            raise ValueError("link endpoints must share a direction")
        if self.ramp is not None and self.ramp.kind not in ("E", "X"):
            raise ValueError("ramp must be an entry (E) or exit (X) station")

    @property
    def kind(self) -> str:
        if self.ramp is None:
            return "plain"
        return "entry" if self.ramp.kind == "E" else "exit"


@dataclass
class Topology:
    name: str
    links: list[Link]

    def __post_init__(self):
        ramps = [ln.ramp.render() for ln in self.links if ln.ramp is not None]
        if len(ramps) != len(set(ramps)):
            raise ValueError("ramp station ids must be unique across the topology")
        for d in self.directions():
            chain = self.chain(d)
            for a, b in zip(chain, chain[1:]):
                if a.downstream != b.upstream:
                    raise ValueError(
                        f"direction {d} chain breaks between {a.downstream} and {b.upstream}"
                    )
            ids = [chain[0].upstream.render()] + [ln.downstream.render() for ln in chain]
            if len(ids) != len(set(ids)):
                raise ValueError(f"direction {d} revisits a mainline station")

    def directions(self) -> list[str]:
        return sorted({ln.upstream.kind for ln in self.links})

    def chain(self, direction: str) -> list[Link]:
        """Links of one direction in driving order."""
        return [ln for ln in self.links if ln.upstream.kind == direction]

    def mainline(self, direction: str) -> list[StationId]:
        """Mainline stations of one direction in driving order."""
        chain = self.chain(direction)
        if not chain:
            return []
        return [chain[0].upstream] + [ln.downstream for ln in chain]

    def stations(self) -> list[StationId]:
        """All stations in canonical (index, kind) order."""
        seen = set()
        out = []
        for ln in self.links:
            for s in (ln.upstream, ln.downstream, ln.ramp):
                if s is not None and s not in seen:
                    seen.add(s)
                    out.append(s)
        return sorted(out)

    # -- JSON interchange ---------------------------------------------------

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "links": [
                {
                    "upstream": ln.upstream.render(),
                    "downstream": ln.downstream.render(),
                    "ramp": ln.ramp.render() if ln.ramp else None,
                }
                for ln in self.links
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Topology":
        links = [
            Link(
                upstream=StationId.parse(ln["upstream"]),
                downstream=StationId.parse(ln["downstream"]),
                ramp=StationId.parse(ln["ramp"]) if ln.get("ramp") else None,
            )
            for ln in obj["links"]
        ]
        return cls(name=obj.get("name", "unnamed"), links=links)


def save_topology(path, topo: Topology) -> None:
    with open(path, "w") as fh:
        json.dump(topo.to_json(), fh, indent=2)
        fh.write("\n")


def load_topology(path) -> Topology:
    with open(path) as fh:
        return Topology.from_json(json.load(fh))


# ---------------------------------------------------------------------------
# Conservation checks
# ---------------------------------------------------------------------------


@dataclass
class ConstraintCheck:
    """Residuals of one conservation constraint over time.

    TIs where any involved series is masked as missing are skipped; the
    ``checked`` mask records which TIs were actually compared.
    """

    kind: str
    stations: tuple[str, ...]
    residuals: np.ndarray
    checked: np.ndarray
    epsilon: float

    @property
    def n_checked(self) -> int:
        return int(self.checked.sum())

    @property
    def n_violations(self) -> int:
        return int((np.abs(self.residuals[self.checked]) > self.epsilon).sum())

    @property
    def max_abs_residual(self) -> float:
        if self.n_checked == 0:
            return 0.0
        return float(np.abs(self.residuals[self.checked]).max())

    @property
    def ok(self) -> bool:
        return self.n_violations == 0


@dataclass
class ConservationReport:
    epsilon: float
    checks: list[ConstraintCheck] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def n_checked(self) -> int:
        return sum(c.n_checked for c in self.checks)

    @property
    def n_violations(self) -> int:
        return sum(c.n_violations for c in self.checks)

    @property
    def fraction_ok(self) -> float:
        """Fraction of checked cells whose residual is within epsilon."""
        n = self.n_checked
        if n == 0:
            return 1.0
        return 1.0 - self.n_violations / n

    @property
    def max_abs_residual(self) -> float:
        return max((c.max_abs_residual for c in self.checks), default=0.0)

    def summary(self) -> str:
        lines = [
            f"conservation check: eps={self.epsilon:g}, "
            f"{self.n_checked} cells, {self.n_violations} violations "
            f"({100 * self.fraction_ok:.3f}% ok), max |residual|={self.max_abs_residual:.6g}"
        ]
        for c in self.checks:
            status = "ok" if c.ok else f"{c.n_violations} violations"
            lines.append(
                f"  {c.kind:<7} {' '.join(c.stations):<12} "
                f"max |r|={c.max_abs_residual:>10.4g}  {status}"
            )
        return "\n".join(lines)


def _check(kind, ids, residuals, checked, epsilon) -> ConstraintCheck:
    return ConstraintCheck(
        kind=kind,
        stations=tuple(s.render() for s in ids),
        residuals=residuals,
        checked=checked,
        epsilon=epsilon,
    )


def validate_passing(link: Link, data: dict[str, FlowSeries], epsilon: float) -> ConstraintCheck:
    """downstream - upstream on a plain link."""
    up = data[link.upstream.render()]
    down = data[link.downstream.render()]
    residuals = down.values - up.values
    checked = ~(up.missing | down.missing)
    return _check("passing", (link.upstream, link.downstream), residuals, checked, epsilon)


def validate_exit(link: Link, data: dict[str, FlowSeries], epsilon: float) -> ConstraintCheck:
    """upstream - (downstream + exit) on an exit link."""
    up = data[link.upstream.render()]
    down = data[link.downstream.render()]
    ramp = data[link.ramp.render()]
    residuals = up.values - (down.values + ramp.values)
    checked = ~(up.missing | down.missing | ramp.missing)
    return _check("exit", (link.upstream, link.downstream, link.ramp), residuals, checked, epsilon)


def validate_entry(link: Link, data: dict[str, FlowSeries], epsilon: float) -> ConstraintCheck:
    """downstream - (upstream + entry) on an entry link."""
    up = data[link.upstream.render()]
    down = data[link.downstream.render()]
    ramp = data[link.ramp.render()]
    residuals = down.values - (up.values + ramp.values)
    checked = ~(up.missing | down.missing | ramp.missing)
    return _check("entry", (link.upstream, link.downstream, link.ramp), residuals, checked, epsilon)


def validate_conservation(
    topo: Topology, data: dict[str, FlowSeries], epsilon: float
) -> ConservationReport:
    """Check every link of the topology against aligned per-station series."""
    missing = [s.render() for s in topo.stations() if s.render() not in data]
    if missing:
        raise KeyError(f"data lacks series for stations: {', '.join(missing)}")
    report = ConservationReport(epsilon=epsilon)
    for ln in topo.links:
        if ln.kind == "plain":
            report.checks.append(validate_passing(ln, data, epsilon))
        elif ln.kind == "exit":
            report.checks.append(validate_exit(ln, data, epsilon))
        else:
            report.checks.append(validate_entry(ln, data, epsilon))
    return report
