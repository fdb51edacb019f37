"""Tests for the discrete-event simulator."""

import math
from dataclasses import replace

import numpy as np
import pytest

from agrotrack.analytics import PipelineDelays, alert_latency, next_uplink_after
from agrotrack.channel import ChannelParams, RadioParams
from agrotrack.energy import avg_current_multi
from agrotrack.engine.rng import NodeStreams
from agrotrack.engine.scenario import GatewaySpec, load_bundled, resolve_scenario
from agrotrack.engine.simulator import (
    EventKind,
    MetricsReport,
    Reception,
    Simulation,
    heard_by_dead_gateway,
    mark_collisions,
    resolve_fate,
    run,
    transmit,
)
from agrotrack.engine.sweep import with_failures
from agrotrack.errors import ResourceError
from agrotrack.telemetry import Fate, Measurement, Packet


def reception(  # noqa: PLR0913
    gateway: int = 0,
    start: float = 0.0,
    end: float = 1.0,
    rx_dbm: float = -100.0,
    *,
    link_ok: bool = True,
    live: bool = True,
    obstructed: bool = False,
    collided: bool = False,
) -> Reception:
    return Reception(
        gateway=gateway,
        start=start,
        end=end,
        channel=0,
        sf=7,
        distance=100.0,
        obstructed=obstructed,
        snr_db=10.0,
        rx_dbm=rx_dbm,
        p_success=1.0 if link_ok else 0.0,
        link_ok=link_ok,
        live=live,
        collided=collided,
    )


# ============================================================================
# Link evaluation
# ============================================================================


def test_event_ranks_break_ties() -> None:
    assert EventKind.TX_END < EventKind.CLOUD < EventKind.UPLINK < EventKind.ALERT


def test_transmit_draws_for_dead_gateways_too() -> None:
    gateways = [GatewaySpec((0.0, 0.0)), GatewaySpec((500.0, 0.0))]
    kwargs = {
        "obstructions": (),
        "channel": ChannelParams(),
        "radio": RadioParams(),
        "start": 5.0,
        "airtime": 0.05,
    }
    all_live = transmit(
        (100.0, 0.0), gateways, frozenset({0, 1}), rng=np.random.default_rng(3), **kwargs
    )
    one_live = transmit(
        (100.0, 0.0), gateways, frozenset({0}), rng=np.random.default_rng(3), **kwargs
    )
    assert [r.snr_db for r in all_live] == [r.snr_db for r in one_live]
    assert not one_live[1].live
    assert all_live[0].end == pytest.approx(5.05)


def test_hard_reception_is_deterministic_at_short_range() -> None:
    receptions = transmit(
        (10.0, 0.0),
        [GatewaySpec((0.0, 0.0))],
        frozenset({0}),
        obstructions=(),
        channel=ChannelParams(sigma=0.0),
        radio=RadioParams(),
        rng=np.random.default_rng(0),
        reception="hard",
    )
    assert receptions[0].p_success == 1.0
    assert receptions[0].received


def test_fate_priority() -> None:
    assert resolve_fate([reception(), reception(1, link_ok=False)]) == Fate.DELIVERED
    assert (
        resolve_fate([reception(collided=True), reception(1, link_ok=False)])
        == Fate.LOST_COLLISION
    )
    assert resolve_fate([reception(link_ok=False)]) == Fate.LOST_SNR
    assert resolve_fate([reception(link_ok=False, obstructed=True)]) == Fate.LOST_OBSTRUCTION
    assert resolve_fate([reception(live=False)]) == Fate.LOST_SNR


def test_only_a_demodulating_dead_gateway_marks_an_outage() -> None:
    assert heard_by_dead_gateway([reception(), reception(1, live=False)])
    assert not heard_by_dead_gateway([reception(), reception(1, live=False, link_ok=False)])
    assert not heard_by_dead_gateway([reception(link_ok=False)])


def test_overlapping_receptions_collide_without_capture() -> None:
    a = reception(start=0.0, end=1.0, rx_dbm=-90.0)
    b = reception(start=0.5, end=1.5, rx_dbm=-110.0)
    mark_collisions(a, [a, b], capture=False, capture_db=6.0)
    mark_collisions(b, [a, b], capture=False, capture_db=6.0)
    assert a.collided
    assert b.collided


def test_capture_saves_the_stronger_packet() -> None:
    a = reception(start=0.0, end=1.0, rx_dbm=-90.0)
    b = reception(start=0.5, end=1.5, rx_dbm=-110.0)
    mark_collisions(a, [a, b], capture=True, capture_db=6.0)
    mark_collisions(b, [a, b], capture=True, capture_db=6.0)
    assert not a.collided
    assert b.collided


def test_back_to_back_receptions_do_not_collide() -> None:
    a = reception(start=0.0, end=1.0)
    b = reception(start=1.0, end=2.0)
    mark_collisions(a, [a, b], capture=False, capture_db=6.0)
    assert not a.collided


# ============================================================================
# Runs
# ============================================================================


@pytest.fixture(scope="module")
def short_baseline_report() -> MetricsReport:
    return run(resolve_scenario("trial_baseline", ({"duration_s": 150_000},)))


def test_fates_are_conserved(short_baseline_report: MetricsReport) -> None:
    report = short_baseline_report
    assert sum(report.fate_counts.values()) == report.generated
    assert sum(report.loss_by_cause.values()) == pytest.approx(1.0)
    assert report.generated > 0


def test_baseline_delivers_almost_everything(short_baseline_report: MetricsReport) -> None:
    assert short_baseline_report.pdr >= 0.975  # noqa: PLR2004


def test_no_outage_plan_means_full_recovery(short_baseline_report: MetricsReport) -> None:
    assert short_baseline_report.recovery_ratio == 1.0
    assert short_baseline_report.outage_generated == 0


def test_injected_episodes_raise_alerts_quickly(short_baseline_report: MetricsReport) -> None:
    alerts = short_baseline_report.alert_log
    assert [(a.animal_id, a.rule) for a in alerts] == [(2, "inactivity"), (4, "fever")]
    assert all(a.latency_s <= 20.0 for a in alerts)  # noqa: PLR2004


def test_battery_follows_the_average_current(short_baseline_report: MetricsReport) -> None:
    scenario = load_bundled("trial_baseline")
    series = short_baseline_report.battery_series[0]
    (t0, b0), (t1, b1) = series[0], series[-1]
    drawn_ma = (b0 - b1) / ((t1 - t0) / 3600.0)
    assert drawn_ma == pytest.approx(avg_current_multi(scenario.profile), rel=0.01)


def test_runs_are_deterministic() -> None:
    scenario = resolve_scenario("trial_baseline", ({"duration_s": 20_000},))
    first, second = run(scenario), run(scenario)
    assert first.fate_counts == second.fate_counts
    assert first.throughput_series == second.throughput_series
    assert first.battery_series == second.battery_series
    assert first.events == second.events


def test_seed_changes_the_run() -> None:
    scenario = resolve_scenario("trial_baseline", ({"duration_s": 20_000},))
    assert run(scenario).battery_series != run(scenario.with_seed(7)).battery_series


def test_event_queue_bound() -> None:
    scenario = resolve_scenario("trial_baseline", ({"duration_s": 600, "max_queue": 2},))
    with pytest.raises(ResourceError, match="event queue"):
        run(scenario)


def test_gateway_failures_recover_through_the_buffer() -> None:
    report = run(load_bundled("robustness"))
    assert report.outage_generated > 0
    assert report.recovery_ratio == pytest.approx(0.85, abs=0.02)
    assert report.fate_counts[Fate.BUFFERED_THEN_DELIVERED] > 0


def test_zero_buffer_expires_outage_traffic() -> None:
    scenario = replace(load_bundled("robustness"), node_buffer=0)
    report = run(scenario)
    assert report.fate_counts[Fate.EXPIRED] > 0
    assert report.fate_counts[Fate.BUFFERED_THEN_DELIVERED] == 0
    assert report.recovery_ratio < 0.5  # noqa: PLR2004


def test_outage_is_attributed_to_the_failed_gateway_only() -> None:
    sim = Simulation(with_failures(load_bundled("robustness"), 1))
    report = sim.run()
    assert {p.node_id for p in sim.packets if p.outage} == {4, 5, 6, 7}
    assert report.outage_generated == sum(p.outage for p in sim.packets)
    served_elsewhere = [p for p in sim.packets if p.node_id not in {4, 5, 6, 7}]
    assert all(p.fate != Fate.BUFFERED_THEN_DELIVERED for p in served_elsewhere)


def test_a_live_gateway_in_range_keeps_traffic_out_of_the_buffer() -> None:
    scenario = resolve_scenario(
        "robustness",
        (
            {
                "duration_s": 3600,
                "herd": {"count": 1, "positions_m": [[0, 0]]},
                "gateways": [{"position_m": [-100, 0]}, {"position_m": [100, 0]}],
                "failure_plan": [{"gateway": 1, "start_s": 0, "end_s": 3000}],
            },
        ),
    )
    report = run(scenario)
    assert report.outage_generated > 0
    assert report.fate_counts[Fate.BUFFERED_THEN_DELIVERED] == 0
    assert report.recovery_ratio >= 0.95  # noqa: PLR2004


def test_fever_waits_for_the_next_uplink_without_event_uplink() -> None:
    base = load_bundled("trial_baseline")
    interval = base.profile.report_interval
    phase = float(NodeStreams(base.seed, 4)["schedule"].uniform(0.0, interval))
    onset = phase + 10 * interval + 1.0
    scenario = resolve_scenario(
        "trial_baseline",
        (
            {
                "duration_s": 20_000,
                "alerts": {"event_uplink": False},
                "episodes": [
                    {"animal": 4, "kind": "fever", "start_s": onset, "duration_s": 3600}
                ],
            },
        ),
    )
    (alert,) = run(scenario).alert_log
    assert alert.rule == "fever"
    assert alert.trigger_s == pytest.approx(onset)
    assert alert.latency_s > 20.0  # noqa: PLR2004
    delays = PipelineDelays(scenario.airtime, 0.5, scenario.cloud.alert_dispatch_s)
    floor = alert_latency(onset, next_uplink_after(onset, phase, interval), delays)
    assert alert.latency_s >= floor - 1.0


def test_retransmits_leave_from_the_current_position() -> None:
    sim = Simulation(resolve_scenario("trial_baseline", ({"duration_s": 20_000},)))
    node = sim.nodes[0]
    start = node.state.position
    payload = Measurement(x=start[0], y=start[1], body_temp=38.6, activity=0.5, battery_mah=1.0)
    packet = Packet(
        node_id=0, seq=0, timestamp=0.0, payload=payload, tx_power=14.0, sf=7, airtime=0.06
    )
    node.buffer.append(packet)
    sim.on_retransmit(7200.0, node)
    assert node.state.position != start
    (sent,) = sim.gateways[0].receptions
    expected = max(math.dist(node.state.position, sim.gateways[0].spec.position), 1.0)
    assert sent.distance == pytest.approx(expected)


def test_edge_prefilter_suppresses_normal_readings() -> None:
    scenario = resolve_scenario(
        "trial_baseline",
        ({"duration_s": 20_000, "alerts": {"edge_prefilter": True, "heartbeat_every": 4}},),
    )
    report = run(scenario)
    assert report.suppressed > 0
    unfiltered = replace(scenario, alerts=replace(scenario.alerts, edge_prefilter=False))
    assert report.generated + report.suppressed == run(unfiltered).generated


def test_cloud_capacity_limits_throughput() -> None:
    scenario = resolve_scenario("scaling", ({"cloud": {"service_msg_s": 20.0}},)).with_herd(300)
    report = run(scenario)
    assert report.throughput_msg_s <= 20.0 + 0.01  # noqa: PLR2004
