"""
Declarative simulation input.

A scenario is a JSON document whose keys carry their units (`_m`, `_s`,
`_dbm`, ...). Parsing rejects unknown keys and reports every violation it
finds at once, as a `Left` of messages; a valid document becomes a `Right`
holding a frozen `Scenario`.
"""

import hashlib
import json
import logging
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Final, Literal

from pyfect import either
from pyfect.either import Either, Left, Right

from agrotrack.channel import ChannelParams, RadioParams
from agrotrack.energy import BatterySpec, EnergyProfile, time_on_air
from agrotrack.errors import DomainError, ValidationError
from agrotrack.geometry import Point, Polygon
from agrotrack.reliability import MacParams

logger = logging.getLogger(__name__)

type Document = dict[str, Any]

# ============================================================================
# Sections
# ============================================================================


@dataclass(frozen=True)
class FieldSpec:
    boundary: Polygon
    obstructions: tuple[Polygon, ...] = ()
    obstruction_scale: float = 1.0

    @property
    def effective_obstructions(self) -> tuple[Polygon, ...]:
        """Obstruction polygons after scaling each about its own centroid."""
        if self.obstruction_scale == 1.0:
            return self.obstructions
        return tuple(p.scaled(self.obstruction_scale) for p in self.obstructions)


@dataclass(frozen=True)
class HerdSpec:
    count: int = 15
    positions: tuple[Point, ...] | None = None


@dataclass(frozen=True)
class MobilitySpec:
    model: Literal["random_waypoint", "static"] = "random_waypoint"
    speed_min: float = 0.05
    speed_max: float = 0.6
    pause_min: float = 60.0
    pause_max: float = 1800.0


@dataclass(frozen=True)
class MacSettings:
    """
    Medium-access and reception settings.

    `tau` and `slot_s` of `None` derive from the radio's airtime and the
    reporting interval.
    """

    mode: Literal["unslotted", "slotted"] = "unslotted"
    tau: float | None = None
    slot_s: float | None = None
    k_microslots: int = 8
    jitter: bool = True
    capture: bool = True
    capture_db: float = 6.0
    reception: Literal["logistic", "hard"] = "logistic"


@dataclass(frozen=True)
class GatewaySpec:
    position: Point
    backhaul_s: float = 0.5
    ingest_msg_s: float = 200.0
    queue_bound: int = 64


@dataclass(frozen=True)
class CloudSpec:
    service_msg_s: float = 75.0
    queue_bound: int = 1000
    alert_dispatch_s: float = 2.0


@dataclass(frozen=True)
class Outage:
    gateway: int
    start_s: float
    end_s: float


@dataclass(frozen=True)
class AlertSettings:
    fever_c: float = 39.5
    inactivity_floor: float = 0.05
    inactivity_window_s: float = 3600.0
    geofence: Polygon | None = None
    event_uplink: bool = False
    alert_repeats: int = 3
    repeat_gap_s: float = 2.0
    edge_prefilter: bool = False
    heartbeat_every: int = 6


@dataclass(frozen=True)
class Episode:
    animal: int
    kind: Literal["inactivity", "fever"]
    start_s: float
    duration_s: float

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s

    def active(self, t: float) -> bool:
        return self.start_s <= t < self.end_s


@dataclass(frozen=True)
class ReportSettings:
    throughput_bucket_s: float = 60.0
    warmup_s: float = 0.0
    distance_bin_m: float = 250.0


@dataclass(frozen=True)
class Scenario:
    """Complete, validated input of one simulation run."""

    name: str
    field: FieldSpec
    gateways: tuple[GatewaySpec, ...]
    duration_s: float
    seed: int = 0
    herd: HerdSpec = HerdSpec()
    mobility: MobilitySpec = MobilitySpec()
    radio: RadioParams = RadioParams()
    channel: ChannelParams = field(default_factory=ChannelParams)
    energy: EnergyProfile = EnergyProfile()
    battery: BatterySpec = BatterySpec()
    mac: MacSettings = MacSettings()
    cloud: CloudSpec = CloudSpec()
    failure_plan: tuple[Outage, ...] = ()
    node_buffer: int = 16
    alerts: AlertSettings = AlertSettings()
    episodes: tuple[Episode, ...] = ()
    report: ReportSettings = ReportSettings()
    notes: tuple[str, ...] = ()
    max_queue: int = 1_000_000

    @property
    def airtime(self) -> float:
        return time_on_air(self.radio)

    @property
    def profile(self) -> EnergyProfile:
        """Energy profile with the transmit window pinned to the radio, unless fixed."""
        if self.energy.t_tx is not None:
            return self.energy
        return self.energy.for_radio(self.radio)

    @property
    def geofence(self) -> Polygon:
        return self.alerts.geofence or self.field.boundary

    def mac_params(self) -> MacParams:
        slot = self.mac.slot_s if self.mac.slot_s is not None else self.airtime
        tau = self.mac.tau
        if tau is None:
            tau = min(slot / self.energy.report_interval, 1.0)
        return MacParams(
            n_nodes=self.herd.count,
            tau=tau,
            k_microslots=self.mac.k_microslots,
            slot_s=slot,
        )

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed)

    def with_herd(self, count: int, *, scale_field: bool = True) -> "Scenario":
        """
        Same scenario with a different herd size.

        With `scale_field` the field, its obstructions and the gateway sites
        are stretched about the field centroid so the herd density stays
        constant. Explicit positions are dropped and episodes for animals that
        no longer exist are removed.
        """
        factor = math.sqrt(count / self.herd.count) if scale_field else 1.0
        origin = self.field.boundary.centroid

        def stretch(p: Point) -> Point:
            dx, dy = p[0] - origin[0], p[1] - origin[1]
            return (origin[0] + dx * factor, origin[1] + dy * factor)

        new_field = FieldSpec(
            boundary=self.field.boundary.scaled(factor, origin),
            obstructions=tuple(o.scaled(factor, origin) for o in self.field.obstructions),
            obstruction_scale=self.field.obstruction_scale,
        )
        gateways = tuple(replace(g, position=stretch(g.position)) for g in self.gateways)
        geofence = self.alerts.geofence
        scaled_fence = geofence.scaled(factor, origin) if geofence else None
        alerts = replace(self.alerts, geofence=scaled_fence)
        return replace(
            self,
            herd=HerdSpec(count=count),
            field=new_field,
            gateways=gateways,
            alerts=alerts,
            episodes=tuple(e for e in self.episodes if e.animal < count),
        )


# ============================================================================
# Key tables: JSON key -> dataclass field
# ============================================================================

_RADIO_KEYS: Final = {
    "p_t_dbm": "p_t",
    "g_t_dbi": "g_t",
    "g_r_dbi": "g_r",
    "nf_db": "nf",
    "s_min_dbm": "s_min",
    "sf": "sf",
    "bw_hz": "bw",
    "cr": "cr",
    "payload_bytes": "payload_bytes",
    "preamble_symbols": "preamble_symbols",
    "channels": "channels",
}
_CHANNEL_KEYS: Final = {
    "pl_d0_db": "pl_d0",
    "d0_m": "d0",
    "n": "n",
    "sigma_db": "sigma",
    "delta_obs_db": "delta_obs",
    "alpha_per_db": "alpha",
    "gamma_th_db": "gamma_th",
}
_ENERGY_KEYS: Final = {
    "i_sen_ma": "i_sen",
    "i_proc_ma": "i_proc",
    "i_tx_ma": "i_tx",
    "i_rx_ma": "i_rx",
    "i_slp_ma": "i_slp",
    "t_sen_s": "t_sen",
    "t_proc_s": "t_proc",
    "t_rx_s": "t_rx",
    "t_tx_s": "t_tx",
    "report_interval_s": "report_interval",
    "solar_credit_mj": "solar_credit_mj",
}
_BATTERY_KEYS: Final = {"capacity_mah": "capacity_mah", "voltage_v": "voltage"}
_MOBILITY_KEYS: Final = {
    "model": "model",
    "speed_min_m_s": "speed_min",
    "speed_max_m_s": "speed_max",
    "pause_min_s": "pause_min",
    "pause_max_s": "pause_max",
}
_MAC_KEYS: Final = {
    "mode": "mode",
    "tau": "tau",
    "slot_s": "slot_s",
    "k_microslots": "k_microslots",
    "jitter": "jitter",
    "capture": "capture",
    "capture_db": "capture_db",
    "reception": "reception",
}
_GATEWAY_KEYS: Final = {
    "position_m": "position",
    "backhaul_s": "backhaul_s",
    "ingest_msg_s": "ingest_msg_s",
    "queue_bound": "queue_bound",
}
_CLOUD_KEYS: Final = {
    "service_msg_s": "service_msg_s",
    "queue_bound": "queue_bound",
    "alert_dispatch_s": "alert_dispatch_s",
}
_OUTAGE_KEYS: Final = {"gateway": "gateway", "start_s": "start_s", "end_s": "end_s"}
_ALERT_KEYS: Final = {
    "fever_c": "fever_c",
    "inactivity_floor": "inactivity_floor",
    "inactivity_window_s": "inactivity_window_s",
    "geofence_m": "geofence",
    "event_uplink": "event_uplink",
    "alert_repeats": "alert_repeats",
    "repeat_gap_s": "repeat_gap_s",
    "edge_prefilter": "edge_prefilter",
    "heartbeat_every": "heartbeat_every",
}
_EPISODE_KEYS: Final = {
    "animal": "animal",
    "kind": "kind",
    "start_s": "start_s",
    "duration_s": "duration_s",
}
_REPORT_KEYS: Final = {
    "throughput_bucket_s": "throughput_bucket_s",
    "warmup_s": "warmup_s",
    "distance_bin_m": "distance_bin_m",
}
_FIELD_KEYS: Final = {
    "boundary_m": "boundary",
    "obstructions_m": "obstructions",
    "obstruction_scale": "obstruction_scale",
}
_HERD_KEYS: Final = {"count": "count", "positions_m": "positions"}
_TOP_KEYS: Final = frozenset(
    {
        "name",
        "seed",
        "duration_s",
        "field",
        "herd",
        "mobility",
        "radio",
        "channel",
        "energy",
        "battery",
        "mac",
        "gateways",
        "cloud",
        "failure_plan",
        "node_buffer",
        "alerts",
        "episodes",
        "report",
        "notes",
        "max_queue",
    }
)

_CONVERTERS: Final[dict[str, Callable[[Any], Any]]] = {
    "boundary": Polygon.of,
    "obstructions": lambda polys: tuple(Polygon.of(p) for p in polys),
    "geofence": lambda poly: None if poly is None else Polygon.of(poly),
    "positions": lambda pts: None if pts is None else tuple((float(x), float(y)) for x, y in pts),
    "position": lambda p: (float(p[0]), float(p[1])),
    "gamma_th": lambda table: {int(sf): float(v) for sf, v in table.items()},
}


def _build[T](
    section: str,
    raw: object,
    cls: Callable[..., T],
    keys: Mapping[str, str],
    problems: list[str],
) -> T | None:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        problems.append(f"{section} must be an object")
        return None
    problems.extend(f"{section}: unknown key '{k}'" for k in sorted(set(raw) - set(keys)))
    try:
        kwargs = {
            keys[k]: _CONVERTERS.get(keys[k], lambda v: v)(v) for k, v in raw.items() if k in keys
        }
        return cls(**kwargs)
    except ValidationError as e:
        problems.extend(e.violations)
    except (TypeError, ValueError, KeyError, IndexError, AttributeError) as e:
        problems.append(f"{section}: {e}")
    return None


def _build_list[T](
    section: str,
    raw: object,
    cls: Callable[..., T],
    keys: Mapping[str, str],
    problems: list[str],
) -> tuple[T, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        problems.append(f"{section} must be a list")
        return ()
    items = [_build(f"{section}[{i}]", item, cls, keys, problems) for i, item in enumerate(raw)]
    return tuple(item for item in items if item is not None)


# ============================================================================
# Parsing
# ============================================================================


def parse_scenario(doc: object) -> Either[Scenario, list[str]]:
    """
    Validate a scenario document.

    Returns `Right(scenario)` or `Left(violations)` with every problem found.

    Example:
        ```python
        match parse_scenario(json.loads(text)):
            case Right(scenario):
                ...
            case Left(problems):
                print("\\n".join(problems))
        ```
    """
    if not isinstance(doc, dict):
        return either.left(["scenario document must be a JSON object"])
    problems: list[str] = [f"unknown top-level key '{k}'" for k in sorted(set(doc) - _TOP_KEYS)]

    field_spec = _build("field", doc.get("field"), FieldSpec, _FIELD_KEYS, problems)
    herd = _build("herd", doc.get("herd"), HerdSpec, _HERD_KEYS, problems)
    mobility = _build("mobility", doc.get("mobility"), MobilitySpec, _MOBILITY_KEYS, problems)
    radio = _build("radio", doc.get("radio"), RadioParams, _RADIO_KEYS, problems)
    channel = _build("channel", doc.get("channel"), ChannelParams, _CHANNEL_KEYS, problems)
    energy = _build("energy", doc.get("energy"), EnergyProfile, _ENERGY_KEYS, problems)
    battery = _build("battery", doc.get("battery"), BatterySpec, _BATTERY_KEYS, problems)
    mac = _build("mac", doc.get("mac"), MacSettings, _MAC_KEYS, problems)
    cloud = _build("cloud", doc.get("cloud"), CloudSpec, _CLOUD_KEYS, problems)
    alerts = _build("alerts", doc.get("alerts"), AlertSettings, _ALERT_KEYS, problems)
    report = _build("report", doc.get("report"), ReportSettings, _REPORT_KEYS, problems)
    gateways = _build_list("gateways", doc.get("gateways"), GatewaySpec, _GATEWAY_KEYS, problems)
    plan = _build_list("failure_plan", doc.get("failure_plan"), Outage, _OUTAGE_KEYS, problems)
    episodes = _build_list("episodes", doc.get("episodes"), Episode, _EPISODE_KEYS, problems)

    name = doc.get("name", "scenario")
    duration = doc.get("duration_s")
    seed = doc.get("seed", 0)
    node_buffer = doc.get("node_buffer", 16)
    max_queue = doc.get("max_queue", 1_000_000)
    notes = doc.get("notes", [])
    if not isinstance(name, str):
        problems.append("name must be a string")
    if not isinstance(duration, int | float) or isinstance(duration, bool) or not duration > 0:
        problems.append(f"duration_s must be a number > 0, got {duration!r}")
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        problems.append(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    if not isinstance(node_buffer, int) or node_buffer < 0:
        problems.append(f"node_buffer must be an integer >= 0, got {node_buffer!r}")
    if not isinstance(max_queue, int) or max_queue < 1:
        problems.append(f"max_queue must be an integer >= 1, got {max_queue!r}")
    if not isinstance(notes, list) or not all(isinstance(n, str) for n in notes):
        problems.append("notes must be a list of strings")
    if doc.get("field") is None:
        problems.append("field is required")
    if not gateways and not any(p.startswith("gateways") for p in problems):
        problems.append("gateways must list at least one gateway")

    if field_spec is not None and herd is not None and mobility is not None and alerts is not None:
        problems.extend(
            _semantic_problems(field_spec, herd, mobility, alerts, gateways, plan, episodes)
        )
    problems.extend(
        _section_problems(mac or MacSettings(), cloud or CloudSpec(), report or ReportSettings())
    )

    if problems:
        return either.left(problems)
    assert field_spec is not None
    return either.right(
        Scenario(
            name=name,
            field=field_spec,
            gateways=gateways,
            duration_s=float(duration),  # type: ignore[arg-type]
            seed=seed,
            herd=herd or HerdSpec(),
            mobility=mobility or MobilitySpec(),
            radio=radio or RadioParams(),
            channel=channel or ChannelParams(),
            energy=energy or EnergyProfile(),
            battery=battery or BatterySpec(),
            mac=mac or MacSettings(),
            cloud=cloud or CloudSpec(),
            failure_plan=plan,
            node_buffer=node_buffer,
            alerts=alerts or AlertSettings(),
            episodes=episodes,
            report=report or ReportSettings(),
            notes=tuple(notes),
            max_queue=max_queue,
        )
    )


def _semantic_problems(  # noqa: PLR0912, PLR0913
    field_spec: FieldSpec,
    herd: HerdSpec,
    mobility: MobilitySpec,
    alerts: AlertSettings,
    gateways: tuple[GatewaySpec, ...],
    plan: tuple[Outage, ...],
    episodes: tuple[Episode, ...],
) -> list[str]:
    problems: list[str] = []
    boundary = field_spec.boundary
    if len(boundary.vertices) < 3 or boundary.area == 0:  # noqa: PLR2004
        problems.append("field.boundary_m must be a polygon with non-zero area")
        return problems
    if not boundary.is_convex():
        problems.append("field.boundary_m must be convex")
    if field_spec.obstruction_scale < 0:
        problems.append("field.obstruction_scale must be >= 0")
    for i, obstruction in enumerate(field_spec.effective_obstructions):
        if not obstruction.is_convex():
            problems.append(f"field.obstructions_m[{i}] must be convex")
        if not boundary.contains_polygon(obstruction):
            problems.append(f"field.obstructions_m[{i}] lies outside the field")
    if herd.count < 1:
        problems.append(f"herd.count must be >= 1, got {herd.count}")
    if herd.positions is not None:
        if len(herd.positions) != herd.count:
            problems.append(
                f"herd.positions_m lists {len(herd.positions)} positions for {herd.count} animals"
            )
        problems.extend(
            f"herd.positions_m[{i}] lies outside the field"
            for i, p in enumerate(herd.positions)
            if not boundary.contains(p)
        )
    if mobility.model not in ("random_waypoint", "static"):
        problems.append(f"mobility.model must be random_waypoint or static, got {mobility.model}")
    if not 0 <= mobility.speed_min <= mobility.speed_max:
        problems.append("mobility speeds must satisfy 0 <= speed_min_m_s <= speed_max_m_s")
    if not 0 <= mobility.pause_min <= mobility.pause_max:
        problems.append("mobility pauses must satisfy 0 <= pause_min_s <= pause_max_s")
    for i, g in enumerate(gateways):
        if g.backhaul_s < 0 or g.ingest_msg_s <= 0 or g.queue_bound < 1:
            problems.append(
                f"gateways[{i}] needs backhaul_s >= 0, ingest_msg_s > 0, queue_bound >= 1"
            )
    for i, outage in enumerate(plan):
        if not 0 <= outage.gateway < len(gateways):
            problems.append(f"failure_plan[{i}] names unknown gateway {outage.gateway}")
        if not outage.start_s < outage.end_s:
            problems.append(f"failure_plan[{i}] needs start_s < end_s")
    if not 30.0 <= alerts.fever_c <= 45.0:  # noqa: PLR2004
        problems.append(f"alerts.fever_c must be within 30..45 C, got {alerts.fever_c}")
    if not alerts.inactivity_window_s > 0:
        problems.append("alerts.inactivity_window_s must be > 0")
    if alerts.alert_repeats < 1 or alerts.heartbeat_every < 1:
        problems.append("alerts.alert_repeats and alerts.heartbeat_every must be >= 1")
    for i, ep in enumerate(episodes):
        if not 0 <= ep.animal < herd.count:
            problems.append(f"episodes[{i}] names unknown animal {ep.animal}")
        if ep.kind not in ("inactivity", "fever"):
            problems.append(f"episodes[{i}].kind must be inactivity or fever, got {ep.kind}")
        if not ep.duration_s > 0:
            problems.append(f"episodes[{i}].duration_s must be > 0")
    return problems


def _section_problems(mac: MacSettings, cloud: CloudSpec, report: ReportSettings) -> list[str]:
    problems: list[str] = []
    if mac.mode not in ("unslotted", "slotted"):
        problems.append(f"mac.mode must be unslotted or slotted, got {mac.mode!r}")
    if mac.reception not in ("logistic", "hard"):
        problems.append(f"mac.reception must be logistic or hard, got {mac.reception!r}")
    if not isinstance(mac.k_microslots, int) or mac.k_microslots < 1:
        problems.append(f"mac.k_microslots must be an integer >= 1, got {mac.k_microslots!r}")
    if not mac.capture_db >= 0:
        problems.append(f"mac.capture_db must be >= 0, got {mac.capture_db}")
    if mac.tau is not None and not 0 <= mac.tau <= 1:
        problems.append(f"mac.tau must be within [0, 1], got {mac.tau}")
    if mac.slot_s is not None and not mac.slot_s > 0:
        problems.append(f"mac.slot_s must be > 0, got {mac.slot_s}")
    if not cloud.service_msg_s > 0:
        problems.append(f"cloud.service_msg_s must be > 0, got {cloud.service_msg_s}")
    if cloud.queue_bound < 1:
        problems.append(f"cloud.queue_bound must be >= 1, got {cloud.queue_bound}")
    if not cloud.alert_dispatch_s >= 0:
        problems.append(f"cloud.alert_dispatch_s must be >= 0, got {cloud.alert_dispatch_s}")
    if not report.throughput_bucket_s > 0:
        problems.append(
            f"report.throughput_bucket_s must be > 0, got {report.throughput_bucket_s}"
        )
    if not report.distance_bin_m > 0:
        problems.append(f"report.distance_bin_m must be > 0, got {report.distance_bin_m}")
    if not report.warmup_s >= 0:
        problems.append(f"report.warmup_s must be >= 0, got {report.warmup_s}")
    return problems


def check_physics(scenario: Scenario) -> None:
    """
    Reject physically infeasible settings (exit 3 at the command line).

    Raises:
        DomainError: The active windows of a cycle do not fit in the interval
    """
    _ = scenario.profile.sleep_seconds
    if scenario.mac.mode == "slotted" and scenario.mac_params().slot_s <= 0:
        msg = "slotted mode needs a positive slot length"
        raise DomainError(msg)


def load_document(path: Path) -> Document:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        msg = f"{path}: not valid JSON ({e.msg} at line {e.lineno})"
        raise ValidationError([msg]) from e
    except OSError as e:
        msg = f"{path}: cannot read scenario ({e.strerror})"
        raise ValidationError([msg]) from e
    if not isinstance(doc, dict):
        raise ValidationError([f"{path}: scenario document must be a JSON object"])
    return doc


def scenario_from_document(doc: Document) -> Scenario:
    match parse_scenario(doc):
        case Right(scenario):
            check_physics(scenario)
            return scenario
        case Left(problems):
            raise ValidationError(problems)


def load_scenario(path: Path, overlays: tuple[Document, ...] = ()) -> Scenario:
    doc = load_document(path)
    for overlay in overlays:
        doc = merge_documents(doc, overlay)
    return scenario_from_document(doc)


BUNDLED: Final = ("trial_baseline", "scaling", "robustness")


def bundled_path(name: str) -> Path:
    ref = resources.files("agrotrack") / "scenarios" / f"{name}.json"
    return Path(str(ref))


def load_bundled(name: str) -> Scenario:
    if name not in BUNDLED:
        msg = f"unknown bundled scenario '{name}', expected one of {', '.join(BUNDLED)}"
        raise ValidationError([msg])
    return load_scenario(bundled_path(name))


def resolve_scenario(ref: str, overlays: tuple[Document, ...] = ()) -> Scenario:
    """A bundled scenario name or a path to a scenario file."""
    if ref in BUNDLED:
        ref = str(bundled_path(ref))
    return load_scenario(Path(ref), overlays)


# ============================================================================
# Documents
# ============================================================================


def merge_documents(base: Document, overlay: Mapping[str, Any]) -> Document:
    """Deep merge; objects merge key by key, everything else is replaced."""
    merged = dict(base)
    for key, value in overlay.items():
        current = merged.get(key)
        if isinstance(current, dict) and isinstance(value, Mapping):
            merged[key] = merge_documents(current, value)
        else:
            merged[key] = value
    return merged


def _section_doc(obj: object, keys: Mapping[str, str]) -> Document:
    values = {f.name: getattr(obj, f.name) for f in fields(obj)}  # type: ignore[arg-type]
    return {k: _plain(values[attr]) for k, attr in keys.items()}


def _plain(value: object) -> Any:
    match value:
        case Polygon(vertices):
            return [list(v) for v in vertices]
        case dict():
            return {str(k): _plain(v) for k, v in sorted(value.items())}
        case tuple() | list():
            return [_plain(v) for v in value]
        case _:
            return value


def to_document(scenario: Scenario) -> Document:
    """Full document with every default spelled out; parses back to an equal scenario."""
    return {
        "name": scenario.name,
        "seed": scenario.seed,
        "duration_s": scenario.duration_s,
        "field": _section_doc(scenario.field, _FIELD_KEYS),
        "herd": _section_doc(scenario.herd, _HERD_KEYS),
        "mobility": _section_doc(scenario.mobility, _MOBILITY_KEYS),
        "radio": _section_doc(scenario.radio, _RADIO_KEYS),
        "channel": _section_doc(scenario.channel, _CHANNEL_KEYS),
        "energy": _section_doc(scenario.energy, _ENERGY_KEYS),
        "battery": _section_doc(scenario.battery, _BATTERY_KEYS),
        "mac": _section_doc(scenario.mac, _MAC_KEYS),
        "gateways": [_section_doc(g, _GATEWAY_KEYS) for g in scenario.gateways],
        "cloud": _section_doc(scenario.cloud, _CLOUD_KEYS),
        "failure_plan": [_section_doc(o, _OUTAGE_KEYS) for o in scenario.failure_plan],
        "node_buffer": scenario.node_buffer,
        "alerts": _section_doc(scenario.alerts, _ALERT_KEYS),
        "episodes": [_section_doc(e, _EPISODE_KEYS) for e in scenario.episodes],
        "report": _section_doc(scenario.report, _REPORT_KEYS),
        "notes": list(scenario.notes),
        "max_queue": scenario.max_queue,
    }


def canonical_json(doc: object) -> str:
    return json.dumps(
        doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False
    )


def scenario_hash(scenario: Scenario) -> str:
    """SHA-256 of the canonical document; stable across platforms."""
    return hashlib.sha256(canonical_json(to_document(scenario)).encode("ascii")).hexdigest()


__all__ = [
    "BUNDLED",
    "AlertSettings",
    "CloudSpec",
    "Episode",
    "FieldSpec",
    "GatewaySpec",
    "HerdSpec",
    "MacSettings",
    "MobilitySpec",
    "Outage",
    "ReportSettings",
    "Scenario",
    "bundled_path",
    "canonical_json",
    "check_physics",
    "load_bundled",
    "load_document",
    "load_scenario",
    "merge_documents",
    "parse_scenario",
    "resolve_scenario",
    "scenario_from_document",
    "scenario_hash",
    "to_document",
]
