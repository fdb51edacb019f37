"""
Slotted attempt model.

Time is cut into slots of one airtime. In every slot each node transmits with
probability tau; with jitter, a transmission also picks one of K micro-slots
and only meets nodes that picked the same one. Obstruction and capture are
left out, so losses split cleanly into collisions and link failures.
"""

import logging
import math
from typing import Final

import numpy as np

from agrotrack import channel as ch
from agrotrack.engine.rng import NodeStreams
from agrotrack.engine.scenario import Scenario
from agrotrack.engine.simulator import MetricsReport, summarize
from agrotrack.telemetry import Fate, Measurement, Packet

logger = logging.getLogger(__name__)

SLOT_CHUNK: Final = 1024


def _link_success(position: tuple[float, float], scenario: Scenario) -> float:
    """Shadowing-averaged success towards the best gateway, ignoring obstructions."""
    best = 0.0
    for gw in scenario.gateways:
        sample = ch.LinkSample(distance=max(math.dist(position, gw.position), 1.0))
        mean_snr = ch.snr(ch.path_loss(sample, scenario.channel), scenario.radio)
        best = max(best, ch.expected_success(mean_snr, scenario.channel, scenario.radio.sf))
    return best


def run_slotted(scenario: Scenario) -> MetricsReport:
    """
    Run a scenario under the slotted attempt model.

    Slots are drawn in chunks of `SLOT_CHUNK`, so memory stays bounded by the
    herd size whatever the duration. Every node draws attempt and micro-slot
    values for each slot whether or not jitter is on, so a jittered and an
    unjittered run with the same seed see the same attempts.
    """
    mac = scenario.mac_params()
    n_slots = int(scenario.duration_s // mac.slot_s)
    k = mac.k_microslots
    nodes = scenario.herd.count

    streams = [NodeStreams(scenario.seed, i) for i in range(nodes)]
    positions: list[tuple[float, float]] = []
    for i, node_streams in enumerate(streams):
        if scenario.herd.positions is not None:
            positions.append(scenario.herd.positions[i])
        else:
            positions.append(scenario.field.boundary.sample_point(node_streams["placement"]))
    success = np.array([_link_success(p, scenario) for p in positions])

    packets: list[Packet] = []
    departures: list[float] = []
    distances: list[float] = []
    seq = [0] * nodes
    attempted = collisions = 0
    for first in range(0, n_slots, SLOT_CHUNK):
        width = min(SLOT_CHUNK, n_slots - first)
        attempts = np.empty((nodes, width), dtype=bool)
        micro = np.empty((nodes, width), dtype=np.int64)
        link_ok = np.empty((nodes, width), dtype=bool)
        for i, node_streams in enumerate(streams):
            attempts[i] = node_streams["mac"].random(width) < mac.tau
            micro[i] = node_streams["mac"].integers(0, k, width)
            link_ok[i] = node_streams["link"].random(width) < success[i]

        slots = np.broadcast_to(np.arange(width), (nodes, width))
        cell = slots * k + micro if scenario.mac.jitter else slots
        occupancy = np.bincount(cell[attempts], minlength=width * k)
        collided = attempts & (occupancy[cell] > 1)
        attempted += int(attempts.sum())
        collisions += int(collided.sum())

        node_idx, slot_idx = np.nonzero(attempts)
        order = np.lexsort((node_idx, slot_idx))
        for i, s in zip(node_idx[order].tolist(), slot_idx[order].tolist(), strict=True):
            x, y = positions[i]
            t = (first + s) * mac.slot_s
            packet = Packet(
                node_id=i,
                seq=seq[i],
                timestamp=t,
                payload=Measurement(x=x, y=y, body_temp=38.6, activity=0.5, battery_mah=0.0),
                tx_power=scenario.radio.p_t,
                sf=scenario.radio.sf,
                airtime=scenario.airtime,
                attempts=1,
            )
            seq[i] += 1
            if collided[i, s]:
                packet.fate = Fate.LOST_COLLISION
            elif not link_ok[i, s]:
                packet.fate = Fate.LOST_SNR
            else:
                packet.fate = Fate.DELIVERED
                packet.delivered_at = t + mac.slot_s
                departures.append(packet.delivered_at)
            packets.append(packet)
            distances.append(min(math.dist((x, y), g.position) for g in scenario.gateways))

    logger.debug("slotted run: %d slots, %d attempts, %d collided", n_slots, attempted, collisions)
    return summarize(
        scenario,
        packets,
        departures=departures,
        distances=distances,
        processed=[p for p in packets if p.delivered],
        attempts=attempted,
        collisions=collisions,
        events=n_slots,
    )


__all__ = ["SLOT_CHUNK", "run_slotted"]
