"""Tests for alert rules and latency helpers."""

import pytest

from agrotrack.analytics import (
    AlertRule,
    PipelineDelays,
    alert_latency,
    evaluate_rules,
    next_uplink_after,
)
from agrotrack.errors import DomainError, OrderingError, ValidationError
from agrotrack.geometry import Polygon
from agrotrack.telemetry import Measurement, Packet

PEN = Polygon.rectangle(0.0, 0.0, 100.0, 100.0)


def packet(  # noqa: PLR0913
    t: float,
    *,
    node: int = 0,
    temp: float = 38.6,
    activity: float = 0.5,
    xy: tuple[float, float] = (50.0, 50.0),
    still_s: float = 0.0,
    fever_s: float = 0.0,
    delivered_at: float | None = None,
) -> Packet:
    return Packet(
        node_id=node,
        seq=int(t),
        timestamp=t,
        payload=Measurement(
            x=xy[0],
            y=xy[1],
            body_temp=temp,
            activity=activity,
            battery_mah=0.0,
            still_s=still_s,
            fever_s=fever_s,
        ),
        tx_power=14.0,
        sf=7,
        airtime=0.05,
        delivered_at=delivered_at,
    )


# ============================================================================
# Rules
# ============================================================================


def test_fever_fires_once_per_episode_and_rearms() -> None:
    temps = [38.6, 39.6, 40.0, 38.7, 39.5]
    packets = [packet(300.0 * i, temp=t) for i, t in enumerate(temps)]
    events = evaluate_rules(packets, [AlertRule(kind="fever", threshold_c=39.5)])
    assert [e.trigger_s for e in events] == [300.0, 1200.0]


def test_fever_is_timed_from_the_collar_onset() -> None:
    rule = AlertRule(kind="fever", threshold_c=39.5)
    late = packet(1200.0, temp=40.5, fever_s=280.0, delivered_at=1201.0)
    (event,) = evaluate_rules([packet(900.0), late], [rule], dispatch_s=2.0)
    assert event.trigger_s == 920.0  # noqa: PLR2004
    assert event.detection_s == 1200.0  # noqa: PLR2004
    assert event.latency_s == pytest.approx(283.0)

def test_per_animal_threshold_override() -> None:
    rule = AlertRule(kind="fever", threshold_c=39.5, overrides={1: 40.5})
    packets = [packet(0.0, node=0, temp=40.0), packet(0.0, node=1, temp=40.0)]
    assert [e.animal_id for e in evaluate_rules(packets, [rule])] == [0]


def test_geofence_boundary_is_inside() -> None:
    rule = AlertRule(kind="geofence", polygon=PEN)
    packets = [packet(0.0, xy=(100.0, 50.0)), packet(300.0, xy=(100.1, 50.0))]
    events = evaluate_rules(packets, [rule])
    assert len(events) == 1
    assert events[0].trigger_s == 300.0  # noqa: PLR2004


def test_inactivity_needs_the_full_window() -> None:
    rule = AlertRule(kind="inactivity", activity_floor=0.05, window_s=900.0)
    packets = [packet(300.0 * i, activity=0.01) for i in range(4)]
    events = evaluate_rules(packets, [rule])
    assert len(events) == 1
    assert events[0].detection_s == 900.0  # noqa: PLR2004
    assert events[0].trigger_s == 900.0  # noqa: PLR2004


def test_inactivity_credits_collar_stillness() -> None:
    rule = AlertRule(kind="inactivity", activity_floor=0.05, window_s=3600.0)
    events = evaluate_rules([packet(5000.0, activity=0.01, still_s=3600.0)], [rule])
    assert [(e.trigger_s, e.detection_s) for e in events] == [(5000.0, 5000.0)]


def test_short_inactivity_does_not_fire() -> None:
    rule = AlertRule(kind="inactivity", window_s=900.0)
    packets = [packet(0.0, activity=0.01), packet(300.0, activity=0.01), packet(600.0)]
    assert evaluate_rules(packets, [rule]) == []


def test_latency_includes_delivery_and_dispatch() -> None:
    packets = [packet(100.0, temp=41.0, delivered_at=101.5)]
    (event,) = evaluate_rules(packets, [AlertRule(kind="fever")], dispatch_s=2.0)
    assert event.latency_s == pytest.approx(3.5)


def test_out_of_order_packets_are_rejected() -> None:
    with pytest.raises(OrderingError, match="animal 0"):
        evaluate_rules([packet(600.0), packet(300.0)], [AlertRule(kind="fever")])


def test_rule_validation() -> None:
    with pytest.raises(ValidationError, match="geofence rule needs a polygon"):
        AlertRule(kind="geofence")
    with pytest.raises(ValidationError, match="fever threshold"):
        AlertRule(kind="fever", threshold_c=50.0)


# ============================================================================
# Latency model
# ============================================================================


def test_next_uplink_after() -> None:
    assert next_uplink_after(1000.0, 20.0, 300.0) == 1220.0  # noqa: PLR2004
    assert next_uplink_after(920.0, 20.0, 300.0) == 920.0  # noqa: PLR2004
    assert next_uplink_after(5.0, 20.0, 300.0) == 20.0  # noqa: PLR2004


def test_alert_latency() -> None:
    delays = PipelineDelays(airtime_s=0.06, backhaul_s=0.5, processing_s=2.0)
    assert alert_latency(100.0, 400.0, delays) == pytest.approx(302.56)
    with pytest.raises(DomainError):
        alert_latency(100.0, 50.0, delays)
    with pytest.raises(DomainError):
        PipelineDelays(backhaul_s=-1.0)
