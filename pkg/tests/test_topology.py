"""Tests for the station graph and its flow-conservation checks."""

from datetime import datetime

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flowcast.series import FlowSeries, StationId
from flowcast.topology import (
    ConservationReport,
    Link,
    Topology,
    load_topology,
    save_topology,
    validate_conservation,
    validate_entry,
    validate_exit,
    validate_passing,
)

MONDAY = datetime(2024, 3, 4)


def _data(**flows):
    """Build aligned series keyed by station id; values may carry a (values, mask) pair."""
    out = {}
    for sid, v in flows.items():
        if isinstance(v, tuple):
            values, mask = v
        else:
            values, mask = v, None
        out[sid] = FlowSeries(StationId.parse(sid), MONDAY, np.asarray(values, float), mask)
    return out


def _plain(up="01A", down="02A"):
    return Link(StationId.parse(up), StationId.parse(down))


class TestLink:
    def test_kind_from_ramp(self):
        assert _plain().kind == "plain"
        assert Link(StationId.parse("01A"), StationId.parse("02A"), StationId.parse("01E")).kind == "entry"
        assert Link(StationId.parse("01A"), StationId.parse("02A"), StationId.parse("02X")).kind == "exit"

    def test_rejects_cross_direction_link(self):
        with pytest.raises(ValueError):
            Link(StationId.parse("01A"), StationId.parse("02B"))

    def test_rejects_ramp_endpoint(self):
        with pytest.raises(ValueError):
            Link(StationId.parse("01E"), StationId.parse("02A"))


class TestPassing:
    def test_residual_is_downstream_minus_upstream(self):
        data = _data(**{"01A": [100.0, 100.0], "02A": [103.0, 100.0]})
        check = validate_passing(_plain(), data, epsilon=2.0)
        np.testing.assert_array_equal(check.residuals, [3.0, 0.0])
        assert not check.ok
        assert check.n_violations == 1

    def test_exact_balance_passes_at_zero_epsilon(self):
        data = _data(**{"01A": [100.0, 100.0], "02A": [100.0, 100.0]})
        assert validate_passing(_plain(), data, epsilon=0.0).ok

    def test_masked_ti_is_not_checked(self):
        mask = np.array([True, False])
        data = _data(**{"01A": ([100.0, 100.0], mask), "02A": [103.0, 100.0]})
        check = validate_passing(_plain(), data, epsilon=2.0)
        assert check.n_checked == 1
        assert check.ok  # the violating TI is exactly the masked one

    def test_role_swap_negates_residuals(self):
        data = _data(**{"01A": [90.0, 110.0], "02A": [95.0, 100.0]})
        fwd = validate_passing(_plain("01A", "02A"), data, epsilon=1.0)
        rev = validate_passing(_plain("02A", "01A"), data, epsilon=1.0)
        np.testing.assert_array_equal(fwd.residuals, -rev.residuals)
        assert fwd.n_violations == rev.n_violations


class TestRampChecks:
    def test_exit_balance_passes(self):
        """upstream 50 = mainline 30 + exit 20."""
        data = _data(**{"01A": [50.0], "02A": [30.0], "02X": [20.0]})
        link = Link(StationId.parse("01A"), StationId.parse("02A"), StationId.parse("02X"))
        assert validate_exit(link, data, epsilon=0.0).ok

    def test_exit_imbalance_fails(self):
        """Exit of 25 leaves residual -5, beyond epsilon 4."""
        data = _data(**{"01A": [50.0], "02A": [30.0], "02X": [25.0]})
        link = Link(StationId.parse("01A"), StationId.parse("02A"), StationId.parse("02X"))
        check = validate_exit(link, data, epsilon=4.0)
        np.testing.assert_array_equal(check.residuals, [-5.0])
        assert not check.ok

    def test_entry_balance_passes(self):
        """downstream 80 = mainline 60 + entry 20."""
        data = _data(**{"01A": [60.0], "02A": [80.0], "01E": [20.0]})
        link = Link(StationId.parse("01A"), StationId.parse("02A"), StationId.parse("01E"))
        assert validate_entry(link, data, epsilon=0.0).ok

    def test_entry_imbalance_fails(self):
        """Entry of 10 leaves residual 10, beyond epsilon 5."""
        data = _data(**{"01A": [60.0], "02A": [80.0], "01E": [10.0]})
        link = Link(StationId.parse("01A"), StationId.parse("02A"), StationId.parse("01E"))
        check = validate_entry(link, data, epsilon=5.0)
        np.testing.assert_array_equal(check.residuals, [10.0])
        assert not check.ok

    @given(st.floats(min_value=0.0, max_value=20.0), st.floats(min_value=0.0, max_value=20.0))
    def test_pass_is_monotone_in_epsilon(self, eps_small, eps_big):
        """A check that passes at some epsilon passes at every larger one."""
        lo, hi = sorted((eps_small, eps_big))
        data = _data(**{"01A": [100.0, 107.0], "02A": [103.0, 100.0]})
        at_lo = validate_passing(_plain(), data, epsilon=lo)
        at_hi = validate_passing(_plain(), data, epsilon=hi)
        if at_lo.ok:
            assert at_hi.ok
        assert at_hi.n_violations <= at_lo.n_violations


class TestTopology:
    def _topo(self):
        return Topology(
            name="toy",
            links=[
                Link(StationId.parse("01A"), StationId.parse("02A"), StationId.parse("02X")),
                Link(StationId.parse("02A"), StationId.parse("03A"), StationId.parse("02E")),
                Link(StationId.parse("03A"), StationId.parse("04A")),
            ],
        )

    def test_chain_and_mainline_order(self):
        topo = self._topo()
        assert [s.render() for s in topo.mainline("A")] == ["01A", "02A", "03A", "04A"]
        assert topo.directions() == ["A"]

    def test_broken_chain_rejected(self):
        with pytest.raises(ValueError):
            Topology("bad", [_plain("01A", "02A"), _plain("03A", "04A")])

    def test_duplicate_station_rejected(self):
        with pytest.raises(ValueError):
            Topology(
                "bad",
                [
                    Link(StationId.parse("01A"), StationId.parse("02A"), StationId.parse("01E")),
                    Link(StationId.parse("02A"), StationId.parse("03A"), StationId.parse("01E")),
                ],
            )

    def test_json_round_trip(self, tmp_path):
        topo = self._topo()
        path = tmp_path / "topology.json"
        save_topology(path, topo)
        back = load_topology(path)
        assert back.to_json() == topo.to_json()

    def test_validate_requires_all_stations(self):
        topo = self._topo()
        with pytest.raises(KeyError):
            validate_conservation(topo, _data(**{"01A": [1.0]}), epsilon=0.0)

    def test_report_aggregates_checks(self):
        topo = self._topo()
        data = _data(
            **{
                "01A": [50.0],
                "02A": [30.0],
                "02X": [20.0],
                "02E": [15.0],
                "03A": [45.0],
                "04A": [45.0],
            }
        )
        report = validate_conservation(topo, data, epsilon=0.0)
        assert report.ok
        assert report.n_checked == 3
        assert report.fraction_ok == 1.0
        assert "conservation check" in report.summary()

    def test_fraction_ok_counts_cells(self):
        topo = Topology("pair", [_plain()])
        data = _data(**{"01A": [100.0, 100.0, 100.0, 100.0], "02A": [103.0, 100.0, 100.0, 100.0]})
        report = validate_conservation(topo, data, epsilon=2.0)
        assert report.n_checked == 4
        assert report.n_violations == 1
        assert report.fraction_ok == pytest.approx(0.75)
        assert report.max_abs_residual == 3.0

    def test_empty_report_is_vacuously_ok(self):
        report = ConservationReport(epsilon=1.0)
        assert report.ok
        assert report.fraction_ok == 1.0
