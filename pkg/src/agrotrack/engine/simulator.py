"""
Discrete-event simulation of the collar -> gateway -> cloud pipeline.

Events run in (timestamp, event class, node id) order with an insertion
counter as the last tie-break, so a scenario and its seed always replay to the
same report. Randomness comes only from the per-node substreams in
`agrotrack.engine.rng`.
"""

import heapq
import logging
import math
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Final

import numpy as np

from agrotrack import channel as ch
from agrotrack.analytics import AlertEvent, AlertRule, evaluate_rules
from agrotrack.energy import cycle_charge
from agrotrack.engine.failures import inject_failures, normalize_plan
from agrotrack.engine.mobility import AnimalState, step_mobility
from agrotrack.engine.rng import NodeStreams
from agrotrack.engine.scenario import Episode, GatewaySpec, Scenario, check_physics, scenario_hash
from agrotrack.errors import ResourceError
from agrotrack.geometry import Point, Polygon
from agrotrack.telemetry import Fate, Measurement, Packet

logger = logging.getLogger(__name__)

SECONDS_PER_HOUR: Final = 3600.0
NORMAL_TEMP_C: Final = 38.6
FEVER_EXCESS_C: Final = 1.0
RETRANSMIT_GAP_S: Final = 1.0


class EventKind(IntEnum):
    """Event classes; the value is the tie-break rank at equal timestamps."""

    TX_END = 0
    CLOUD = 1
    UPLINK = 2
    ALERT = 3
    RETRY = 4
    RETRANSMIT = 5


# ============================================================================
# Link evaluation
# ============================================================================


@dataclass(slots=True)
class Reception:
    """One gateway's view of one transmission."""

    gateway: int
    start: float
    end: float
    channel: int
    sf: int
    distance: float
    obstructed: bool
    snr_db: float
    rx_dbm: float
    p_success: float
    link_ok: bool
    live: bool
    collided: bool = False

    @property
    def received(self) -> bool:
        return self.live and self.link_ok and not self.collided


def transmit(  # noqa: PLR0913
    position: Point,
    gateways: Sequence[GatewaySpec],
    live: frozenset[int],
    *,
    obstructions: Sequence[Polygon],
    channel: ch.ChannelParams,
    radio: ch.RadioParams,
    rng: np.random.Generator,
    start: float = 0.0,
    airtime: float = 0.0,
    channel_index: int = 0,
    reception: str = "logistic",
) -> list[Reception]:
    """
    Evaluate one uplink against every gateway.

    Draws one shadowing value and one Bernoulli trial per gateway, dead ones
    included, so the stream stays aligned whatever the outage plan.
    """
    n = len(gateways)
    shadows = rng.normal(0.0, 1.0, n) * channel.sigma
    trials = rng.random(n)
    out: list[Reception] = []
    for g, gw in enumerate(gateways):
        distance = max(math.dist(position, gw.position), 1.0)
        obstructed = any(p.intersects_segment(position, gw.position) for p in obstructions)
        sample = ch.LinkSample(distance, obstructed=obstructed, shadow_db=float(shadows[g]))
        pl = ch.path_loss(sample, channel)
        snr_db = ch.snr(pl, radio)
        if reception == "hard":
            p = ch.hard_threshold_success(ch.link_margin(pl, radio))
        else:
            p = ch.packet_success_prob(snr_db, channel, radio.sf)
        out.append(
            Reception(
                gateway=g,
                start=start,
                end=start + airtime,
                channel=channel_index,
                sf=radio.sf,
                distance=distance,
                obstructed=obstructed,
                snr_db=snr_db,
                rx_dbm=radio.eirp_gain - pl,
                p_success=p,
                link_ok=bool(trials[g] < p),
                live=g in live,
            )
        )
    return out


def resolve_fate(receptions: Sequence[Reception]) -> Fate:
    """
    Fate of a transmission from its per-gateway receptions.

    Delivered if any live gateway received it cleanly; otherwise the cause is
    picked by priority collision > snr > obstruction.
    """
    heard = [r for r in receptions if r.live]
    if any(r.received for r in heard):
        return Fate.DELIVERED
    if any(r.collided for r in heard):
        return Fate.LOST_COLLISION
    if not heard or any(not r.obstructed and not r.link_ok for r in heard):
        return Fate.LOST_SNR
    return Fate.LOST_OBSTRUCTION


def heard_by_dead_gateway(receptions: Sequence[Reception]) -> bool:
    """True if a gateway that is down would have demodulated the transmission."""
    return any(r.link_ok and not r.live for r in receptions)


def mark_collisions(
    victim: Reception, others: Sequence[Reception], *, capture: bool, capture_db: float
) -> None:
    """Flag `victim` if an overlapping same-channel, same-SF reception destroys it."""
    for other in others:
        if other is victim or other.channel != victim.channel or other.sf != victim.sf:
            continue
        if other.start >= victim.end or other.end <= victim.start:
            continue
        if capture and victim.rx_dbm - other.rx_dbm >= capture_db:
            continue
        victim.collided = True
        return


# ============================================================================
# Report
# ============================================================================


@dataclass(frozen=True)
class MetricsReport:
    scenario: str
    scenario_hash: str
    seed: int
    duration_s: float
    generated: int
    fate_counts: dict[str, int]
    loss_by_cause: dict[str, float]
    pdr: float
    throughput_msg_s: float
    throughput_series: tuple[tuple[float, float], ...]
    battery_series: dict[int, tuple[tuple[float, float], ...]]
    recovery_ratio: float
    outage_generated: int
    alert_log: tuple[AlertEvent, ...]
    distance_histogram: tuple[tuple[float, int, int], ...]
    hourly_success: tuple[tuple[int, int, int], ...]
    cloud_dropped: int = 0
    suppressed: int = 0
    attempts: int = 0
    collisions: int = 0
    events: int = 0
    notes: tuple[str, ...] = ()
    delivered_packets: tuple[Packet, ...] = field(default=(), repr=False)

    @property
    def loss(self) -> float:
        return 1.0 - self.pdr

    @property
    def collision_rate(self) -> float:
        return self.collisions / self.attempts if self.attempts else 0.0


def summarize(  # noqa: PLR0913
    scenario: Scenario,
    packets: Sequence[Packet],
    *,
    departures: Sequence[float] = (),
    battery: dict[int, list[tuple[float, float]]] | None = None,
    distances: Sequence[float] = (),
    alerts: Sequence[AlertEvent] = (),
    processed: Sequence[Packet] = (),
    cloud_dropped: int = 0,
    suppressed: int = 0,
    attempts: int = 0,
    collisions: int = 0,
    events: int = 0,
) -> MetricsReport:
    """Fold a finished run into a report; every packet must already carry a fate."""
    generated = len(packets)
    counts = dict.fromkeys((f.value for f in Fate), 0)
    for p in packets:
        if p.fate is None:
            msg = f"packet {p.node_id}/{p.seq} finished without a fate"
            raise AssertionError(msg)
        counts[p.fate.value] += 1
    fractions = {k: (v / generated if generated else 0.0) for k, v in counts.items()}
    delivered = counts[Fate.DELIVERED] + counts[Fate.BUFFERED_THEN_DELIVERED]

    bucket = scenario.report.throughput_bucket_s
    n_buckets = max(math.ceil(scenario.duration_s / bucket), 1)
    times = np.asarray(departures, dtype=np.float64)
    times = times[times < scenario.duration_s]
    per_bucket = np.bincount((times // bucket).astype(np.int64), minlength=n_buckets)
    series = tuple((i * bucket, int(c) / bucket) for i, c in enumerate(per_bucket))
    window = scenario.duration_s - scenario.report.warmup_s
    in_window = sum(scenario.report.warmup_s <= t < scenario.duration_s for t in departures)
    throughput = in_window / window if window > 0 else 0.0

    flagged = [p for p in packets if p.outage]
    recovery = sum(p.delivered for p in flagged) / len(flagged) if flagged else 1.0

    bin_m = scenario.report.distance_bin_m
    hist: dict[float, list[int]] = {}
    for p, d in zip(packets, distances, strict=False):
        slot = hist.setdefault(math.floor(d / bin_m) * bin_m, [0, 0])
        slot[0] += 1
        slot[1] += p.delivered
    hourly = [[0, 0] for _ in range(24)]
    for p in packets:
        hour = int(p.timestamp // SECONDS_PER_HOUR) % 24
        hourly[hour][0] += 1
        hourly[hour][1] += p.delivered

    return MetricsReport(
        scenario=scenario.name,
        scenario_hash=scenario_hash(scenario),
        seed=scenario.seed,
        duration_s=scenario.duration_s,
        generated=generated,
        fate_counts=counts,
        loss_by_cause=fractions,
        pdr=delivered / generated if generated else 0.0,
        throughput_msg_s=throughput,
        throughput_series=series,
        battery_series={k: tuple(v) for k, v in sorted((battery or {}).items())},
        recovery_ratio=recovery,
        outage_generated=len(flagged),
        alert_log=tuple(alerts),
        distance_histogram=tuple((k, v[0], v[1]) for k, v in sorted(hist.items())),
        hourly_success=tuple((h, g, d) for h, (g, d) in enumerate(hourly)),
        cloud_dropped=cloud_dropped,
        suppressed=suppressed,
        attempts=attempts,
        collisions=collisions,
        events=events,
        notes=scenario.notes,
        delivered_packets=tuple(processed),
    )


def alert_rules(scenario: Scenario) -> list[AlertRule]:
    a = scenario.alerts
    return [
        AlertRule(kind="fever", threshold_c=a.fever_c),
        AlertRule(
            kind="inactivity", activity_floor=a.inactivity_floor, window_s=a.inactivity_window_s
        ),
        AlertRule(kind="geofence", polygon=scenario.geofence),
    ]


# ============================================================================
# Simulation state
# ============================================================================


@dataclass(slots=True)
class _Node:
    id: int
    state: AnimalState
    streams: NodeStreams
    phase: float
    episodes: tuple[Episode, ...]
    battery: float
    cycle: int = 0
    next_seq: int = 0
    last_move: float = 0.0
    alive: bool = True
    buffer: deque[Packet] = field(default_factory=deque)
    series: list[tuple[float, float]] = field(default_factory=list)


@dataclass(slots=True)
class _Gateway:
    spec: GatewaySpec
    receptions: list[Reception] = field(default_factory=list)
    in_system: deque[float] = field(default_factory=deque)
    last_departure: float = 0.0


@dataclass(slots=True)
class _Tx:
    packet: Packet
    kind: str
    receptions: list[Reception]
    copies_left: int = 0


class Simulation:
    """One run of a scenario; use `run` unless you need to inspect internals."""

    def __init__(self, scenario: Scenario) -> None:
        check_physics(scenario)
        self.sc = scenario
        self.plan = normalize_plan(scenario.failure_plan)
        self.airtime = scenario.airtime
        self.profile = scenario.profile
        self.cycle_mah = cycle_charge(self.profile) / SECONDS_PER_HOUR
        self.tx_mah = self.profile.i_tx * self.airtime / SECONDS_PER_HOUR
        self.interval = self.profile.report_interval
        self.jitter = scenario.mac.k_microslots * self.airtime if scenario.mac.jitter else 0.0
        self.obstructions = scenario.field.effective_obstructions
        self.gateways = [_Gateway(g) for g in scenario.gateways]
        self.queue: list[tuple[float, int, int, int, object]] = []
        self.counter = 0
        self.events = 0
        self.packets: list[Packet] = []
        self.distances: list[float] = []
        self.processed: list[Packet] = []
        self.seen: set[tuple[int, int]] = set()
        self.departures: list[float] = []
        self.cloud: deque[float] = deque()
        self.cloud_last = 0.0
        self.cloud_dropped = 0
        self.suppressed = 0
        self.attempts = 0
        self.collisions = 0
        self.nodes = [self._make_node(i) for i in range(scenario.herd.count)]

    # -- setup -------------------------------------------------------------

    def _make_node(self, i: int) -> _Node:
        streams = NodeStreams(self.sc.seed, i)
        positions = self.sc.herd.positions
        if positions is not None:
            x, y = positions[i]
        else:
            x, y = self.sc.field.boundary.sample_point(streams["placement"])
        phase = float(streams["schedule"].uniform(0.0, self.interval))
        episodes = tuple(e for e in self.sc.episodes if e.animal == i)
        state = AnimalState(id=i, x=x, y=y, battery_mah_remaining=self.sc.battery.capacity_mah)
        return _Node(i, state, streams, phase, episodes, self.sc.battery.capacity_mah)

    def push(self, time: float, kind: EventKind, node: int, payload: object = None) -> None:
        if len(self.queue) >= self.sc.max_queue:
            msg = f"event queue exceeded its bound of {self.sc.max_queue} entries"
            raise ResourceError(msg)
        self.counter += 1
        heapq.heappush(self.queue, (time, int(kind), node, self.counter, payload))

    # -- node side -----------------------------------------------------------

    def _uplink_time(self, node: _Node) -> float:
        jitter = float(node.streams["schedule"].uniform(0.0, self.jitter)) if self.jitter else 0.0
        return node.phase + node.cycle * self.interval + jitter

    def _episode(self, node: _Node, t: float, kind: str) -> Episode | None:
        for e in node.episodes:
            if e.kind == kind and e.active(t):
                return e
        return None

    def _move(self, node: _Node, t: float) -> None:
        """Advance the animal to `t`; inactive animals stay put."""
        if t <= node.last_move:
            return
        if self._episode(node, t, "inactivity") is None:
            node.state = step_mobility(
                node.state,
                t - node.last_move,
                node.streams["mobility"],
                field=self.sc.field.boundary,
                spec=self.sc.mobility,
            )
        node.last_move = t

    def _sense(self, node: _Node, t: float) -> Measurement:
        inactive = self._episode(node, t, "inactivity")
        fever = self._episode(node, t, "fever")
        self._move(node, t)
        sensor = node.streams["sensor"]
        activity = float(sensor.uniform(0.2, 1.0))
        temp = float(np.clip(NORMAL_TEMP_C + sensor.normal(0.0, 0.15), 38.0, 39.2))
        alerts = self.sc.alerts
        if inactive is not None:
            activity = alerts.inactivity_floor / 2.0
        if fever is not None:
            temp = alerts.fever_c + FEVER_EXCESS_C
        return Measurement(
            x=node.state.x,
            y=node.state.y,
            body_temp=temp,
            activity=activity,
            battery_mah=node.battery,
            still_s=t - inactive.start_s if inactive is not None else 0.0,
            fever_s=t - fever.start_s if fever is not None else 0.0,
        )

    def _new_packet(self, node: _Node, t: float, payload: Measurement, *, alert: bool) -> Packet:
        packet = Packet(
            node_id=node.id,
            seq=node.next_seq,
            timestamp=t,
            payload=payload,
            tx_power=self.sc.radio.p_t,
            sf=self.sc.radio.sf,
            airtime=self.airtime,
            is_alert=alert,
        )
        node.next_seq += 1
        self.packets.append(packet)
        self.distances.append(
            min(math.dist(node.state.position, g.spec.position) for g in self.gateways)
        )
        return packet

    def _send(self, node: _Node, packet: Packet, t: float, kind: str, copies_left: int = 0) -> None:
        self._move(node, t)
        link = node.streams["link"]
        channel_index = int(link.integers(self.sc.radio.channels))
        live = inject_failures(self.plan, t, len(self.gateways))
        receptions = transmit(
            node.state.position,
            self.sc.gateways,
            live,
            obstructions=self.obstructions,
            channel=self.sc.channel,
            radio=self.sc.radio,
            rng=link,
            start=t,
            airtime=self.airtime,
            channel_index=channel_index,
            reception=self.sc.mac.reception,
        )
        packet.attempts += 1
        self.attempts += 1
        for r in receptions:
            self.gateways[r.gateway].receptions.append(r)
        tx = _Tx(packet, kind, receptions, copies_left)
        self.push(t + self.airtime, EventKind.TX_END, node.id, tx)

    def on_uplink(self, t: float, node: _Node) -> None:
        if not node.alive or t >= self.sc.duration_s:
            return
        if node.battery < self.cycle_mah:
            node.alive = False
            logger.info("node %d battery exhausted at t=%.0f s", node.id, t)
            return
        payload = self._sense(node, t)
        node.battery -= self.cycle_mah
        node.series.append((t, node.battery))
        alerts = self.sc.alerts
        normal = payload.body_temp < alerts.fever_c and payload.activity >= alerts.inactivity_floor
        heartbeat = node.cycle % alerts.heartbeat_every == 0
        node.cycle += 1
        self.push(self._uplink_time(node), EventKind.UPLINK, node.id)
        if alerts.edge_prefilter and normal and not node.buffer and not heartbeat:
            self.suppressed += 1
            return
        packet = self._new_packet(node, t, payload, alert=False)
        self._send(node, packet, t, "regular")

    def on_alert(self, t: float, node: _Node) -> None:
        if not node.alive or t >= self.sc.duration_s or node.battery < self.tx_mah:
            return
        payload = self._sense(node, t)
        node.battery -= self.tx_mah
        packet = self._new_packet(node, t, payload, alert=True)
        self._send(node, packet, t, "alert", copies_left=self.sc.alerts.alert_repeats - 1)

    def on_retransmit(self, t: float, node: _Node) -> None:
        if not node.alive or not node.buffer or t >= self.sc.duration_s:
            return
        if node.battery < self.tx_mah:
            return
        node.battery -= self.tx_mah
        self._send(node, node.buffer.popleft(), t, "retransmit")

    def _buffer(self, node: _Node, packet: Packet, *, front: bool = False) -> None:
        capacity = self.sc.node_buffer
        if capacity == 0:
            packet.fate = Fate.EXPIRED
            return
        if front:
            if len(node.buffer) >= capacity:
                packet.fate = Fate.EXPIRED
            else:
                node.buffer.appendleft(packet)
            return
        if len(node.buffer) >= capacity:
            node.buffer.popleft().fate = Fate.EXPIRED
        node.buffer.append(packet)

    # -- gateway and cloud side ------------------------------------------------

    def _admit(self, gw: _Gateway, t: float) -> float | None:
        """Gateway forwarding queue; returns the cloud arrival time or None if full."""
        while gw.in_system and gw.in_system[0] <= t:
            gw.in_system.popleft()
        if len(gw.in_system) >= gw.spec.queue_bound:
            return None
        departure = max(t, gw.last_departure) + 1.0 / gw.spec.ingest_msg_s
        gw.last_departure = departure
        gw.in_system.append(departure)
        return departure + gw.spec.backhaul_s

    def on_tx_end(self, t: float, node: _Node, tx: _Tx) -> None:
        mac = self.sc.mac
        for r in tx.receptions:
            gw = self.gateways[r.gateway]
            horizon = t - 2.0 * self.airtime
            gw.receptions = [o for o in gw.receptions if o.end >= horizon]
            mark_collisions(r, gw.receptions, capture=mac.capture, capture_db=mac.capture_db)
        if any(r.collided for r in tx.receptions if r.live):
            self.collisions += 1

        packet = tx.packet
        if tx.kind != "retransmit" and heard_by_dead_gateway(tx.receptions):
            packet.outage = True
        received = [r for r in tx.receptions if r.received]
        admitted = (self._admit(self.gateways[r.gateway], t) for r in received)
        arrivals = [a for a in admitted if a is not None]
        if arrivals:
            buffered = tx.kind == "retransmit"
            packet.fate = Fate.BUFFERED_THEN_DELIVERED if buffered else Fate.DELIVERED
            self.push(min(arrivals), EventKind.CLOUD, node.id, packet)
            if tx.kind == "regular" and node.buffer:
                gap = RETRANSMIT_GAP_S + float(node.streams["schedule"].uniform(0.0, 1.0))
                self.push(t + gap, EventKind.RETRANSMIT, node.id)
            return
        if received:
            packet.fate = Fate.LOST_CONGESTION
            return
        if tx.copies_left > 0:
            self.push(t + self.sc.alerts.repeat_gap_s, EventKind.RETRY, node.id, tx)
            return
        self._settle_lost(node, tx)

    def _settle_lost(self, node: _Node, tx: _Tx) -> None:
        """Buffer a packet only a dead gateway could have heard; otherwise record the loss."""
        if tx.kind == "retransmit":
            self._buffer(node, tx.packet, front=True)
        elif tx.packet.outage:
            self._buffer(node, tx.packet)
        else:
            tx.packet.fate = resolve_fate(tx.receptions)

    def on_retry(self, t: float, node: _Node, tx: _Tx) -> None:
        if node.battery < self.tx_mah:
            self._settle_lost(node, tx)
            return
        node.battery -= self.tx_mah
        self._send(node, tx.packet, t, tx.kind, copies_left=tx.copies_left - 1)

    def on_cloud(self, t: float, packet: Packet) -> None:
        key = (packet.node_id, packet.seq)
        if key in self.seen:
            return
        self.seen.add(key)
        while self.cloud and self.cloud[0] <= t:
            self.cloud.popleft()
        if len(self.cloud) >= self.sc.cloud.queue_bound:
            self.cloud_dropped += 1
            return
        departure = max(t, self.cloud_last) + 1.0 / self.sc.cloud.service_msg_s
        self.cloud_last = departure
        self.cloud.append(departure)
        packet.delivered_at = departure
        self.departures.append(departure)
        self.processed.append(packet)

    # -- main loop -------------------------------------------------------------

    def run(self) -> MetricsReport:
        for node in self.nodes:
            self.push(self._uplink_time(node), EventKind.UPLINK, node.id)
        if self.sc.alerts.event_uplink:
            window = self.sc.alerts.inactivity_window_s
            for e in self.sc.episodes:
                onset = e.start_s if e.kind == "fever" else e.start_s + window
                if e.kind == "fever" or e.duration_s >= window:
                    self.push(onset, EventKind.ALERT, e.animal)

        while self.queue:
            t, kind, node_id, _, payload = heapq.heappop(self.queue)
            self.events += 1
            node = self.nodes[node_id]
            match EventKind(kind):
                case EventKind.UPLINK:
                    self.on_uplink(t, node)
                case EventKind.TX_END:
                    self.on_tx_end(t, node, payload)  # type: ignore[arg-type]
                case EventKind.CLOUD:
                    self.on_cloud(t, payload)  # type: ignore[arg-type]
                case EventKind.ALERT:
                    self.on_alert(t, node)
                case EventKind.RETRY:
                    self.on_retry(t, node, payload)  # type: ignore[arg-type]
                case EventKind.RETRANSMIT:
                    self.on_retransmit(t, node)

        for node in self.nodes:
            for packet in node.buffer:
                packet.fate = Fate.EXPIRED
            node.buffer.clear()
        logger.debug("processed %d events, peak attempts %d", self.events, self.attempts)

        processed = sorted(self.processed, key=lambda p: (p.timestamp, p.node_id, p.seq))
        alerts = evaluate_rules(
            processed, alert_rules(self.sc), dispatch_s=self.sc.cloud.alert_dispatch_s
        )
        return summarize(
            self.sc,
            self.packets,
            departures=sorted(self.departures),
            battery={n.id: n.series for n in self.nodes},
            distances=self.distances,
            alerts=alerts,
            processed=processed,
            cloud_dropped=self.cloud_dropped,
            suppressed=self.suppressed,
            attempts=self.attempts,
            collisions=self.collisions,
            events=self.events,
        )


def run(scenario: Scenario) -> MetricsReport:
    """
    Simulate a scenario and report its metrics.

    Identical scenarios (seed included) give identical reports. Slotted-mode
    scenarios run the slotted attempt model instead of the event loop.

    Raises:
        DomainError: Physically infeasible energy settings
        ResourceError: The event queue outgrew `max_queue`
    """
    logger.info(
        "run %s seed=%d nodes=%d duration=%.0fs hash=%s",
        scenario.name,
        scenario.seed,
        scenario.herd.count,
        scenario.duration_s,
        scenario_hash(scenario)[:12],
    )
    if scenario.mac.mode == "slotted":
        from agrotrack.engine.slotted import run_slotted  # noqa: PLC0415

        return run_slotted(scenario)
    return Simulation(scenario).run()


__all__ = [
    "EventKind",
    "MetricsReport",
    "Reception",
    "Simulation",
    "alert_rules",
    "heard_by_dead_gateway",
    "mark_collisions",
    "resolve_fate",
    "run",
    "summarize",
    "transmit",
]
