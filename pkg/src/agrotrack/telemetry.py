"""
Packets and the measurements they carry.

Shared by the simulator, which produces packets and assigns their fate, and
by the analytics, which only ever sees what reached the cloud.
"""

from dataclasses import dataclass
from enum import StrEnum


class Fate(StrEnum):
    DELIVERED = "delivered"
    LOST_OBSTRUCTION = "lost_obstruction"
    LOST_SNR = "lost_snr"
    LOST_COLLISION = "lost_collision"
    LOST_CONGESTION = "lost_congestion"
    BUFFERED_THEN_DELIVERED = "buffered_then_delivered"
    EXPIRED = "expired"

    @property
    def delivered(self) -> bool:
        return self in (Fate.DELIVERED, Fate.BUFFERED_THEN_DELIVERED)


@dataclass(frozen=True, slots=True)
class Measurement:
    """
    What a collar reports in one uplink.

    `still_s` is how long the on-collar accelerometer has seen activity below
    the inactivity floor, and `fever_s` how long the thermometer has read at or
    above the fever threshold, both tracked between uplinks.
    """

    x: float
    y: float
    body_temp: float
    activity: float
    battery_mah: float
    still_s: float = 0.0
    fever_s: float = 0.0


@dataclass(slots=True)
class Packet:
    node_id: int
    seq: int
    timestamp: float
    payload: Measurement
    tx_power: float
    sf: int
    airtime: float
    is_alert: bool = False
    fate: Fate | None = None
    delivered_at: float | None = None
    """Time the cloud finished processing the packet, if it did."""
    attempts: int = 0
    outage: bool = False
    """A gateway that was down would have heard one of the packet's first transmissions."""

    @property
    def delivered(self) -> bool:
        return self.fate is not None and self.fate.delivered


__all__ = ["Fate", "Measurement", "Packet"]
