"""
Alerting and herd analytics over delivered telemetry.

Rules run cloud-side on what was actually delivered. The learning helpers
(k-means behaviour groups, z-score outliers, ROC scoring) work on per-animal
feature vectors aggregated from the same stream.
"""

import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Final, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.distance import cdist
from sklearn.cluster import kmeans_plusplus
from sklearn.metrics import roc_auc_score, roc_curve
from sklearn.preprocessing import StandardScaler

from agrotrack.errors import DomainError, OrderingError, UndefinedMetricError, ValidationError
from agrotrack.geometry import Polygon
from agrotrack.telemetry import Packet

logger = logging.getLogger(__name__)

type RuleKind = Literal["geofence", "inactivity", "fever"]

_TIME_EPS: Final = 1e-9

# ============================================================================
# Alert rules
# ============================================================================


@dataclass(frozen=True)
class AlertRule:
    """
    One alert condition.

    `overrides` maps an animal id to its own fever threshold (fever rules) or
    activity floor (inactivity rules).
    """

    kind: RuleKind
    threshold_c: float = 39.5
    activity_floor: float = 0.05
    window_s: float = 3600.0
    polygon: Polygon | None = None
    overrides: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        problems: list[str] = []
        if self.kind not in ("geofence", "inactivity", "fever"):
            problems.append(f"unknown alert rule kind '{self.kind}'")
        if not self.window_s > 0:
            problems.append(f"inactivity window must be > 0 s, got {self.window_s}")
        if not 30.0 <= self.threshold_c <= 45.0:  # noqa: PLR2004
            problems.append(f"fever threshold must be within 30..45 C, got {self.threshold_c}")
        if self.kind == "geofence" and self.polygon is None:
            problems.append("geofence rule needs a polygon")
        if problems:
            raise ValidationError(problems)

    def limit_for(self, animal: int) -> float:
        default = self.threshold_c if self.kind == "fever" else self.activity_floor
        return self.overrides.get(animal, default)


@dataclass(frozen=True)
class AlertEvent:
    animal_id: int
    rule: RuleKind
    trigger_s: float
    detection_s: float
    delivery_s: float

    @property
    def latency_s(self) -> float:
        return self.delivery_s - self.trigger_s


@dataclass
class _RuleState:
    armed: bool = True
    low_since: float | None = None


def _check_order(packets: Sequence[Packet]) -> None:
    last: dict[int, float] = {}
    for p in packets:
        previous = last.get(p.node_id)
        if previous is not None and p.timestamp < previous:
            msg = f"animal {p.node_id}: packet at {p.timestamp} s follows one at {previous} s"
            raise OrderingError(msg)
        last[p.node_id] = p.timestamp


def evaluate_rules(
    packets: Sequence[Packet], rules: Sequence[AlertRule], *, dispatch_s: float = 0.0
) -> list[AlertEvent]:
    """
    Run alert rules over a delivered packet stream.

    Each condition fires once per continuous episode and re-arms after the
    animal recovers: fever on the first sample at or above the threshold,
    geofence on the first position outside the polygon (the boundary counts as
    inside), inactivity once activity has stayed below the floor for the whole
    window. Fever and inactivity onsets honour the collar's own `fever_s` and
    `still_s` counts, so a condition that began between uplinks is timed from
    its onset and the wait for the carrying uplink shows up as latency.

    Raises:
        OrderingError: If packets of one animal are not in time order
    """
    _check_order(packets)
    states: dict[tuple[int, int], _RuleState] = defaultdict(_RuleState)
    events: list[AlertEvent] = []

    for p in packets:
        delivery = (p.delivered_at if p.delivered_at is not None else p.timestamp) + dispatch_s
        for index, rule in enumerate(rules):
            state = states[(p.node_id, index)]
            fired = _apply(rule, state, p)
            if fired is not None:
                trigger, detection = fired
                events.append(AlertEvent(p.node_id, rule.kind, trigger, detection, delivery))

    events.sort(key=lambda e: (e.detection_s, e.animal_id, e.rule))
    return events


def _apply(rule: AlertRule, state: _RuleState, p: Packet) -> tuple[float, float] | None:
    ts = p.timestamp
    match rule.kind:
        case "fever":
            if p.payload.body_temp >= rule.limit_for(p.node_id):
                if state.armed:
                    state.armed = False
                    return (ts - p.payload.fever_s, ts)
            else:
                state.armed = True
        case "geofence":
            assert rule.polygon is not None
            if not rule.polygon.contains((p.payload.x, p.payload.y)):
                if state.armed:
                    state.armed = False
                    return (ts, ts)
            else:
                state.armed = True
        case "inactivity":
            if p.payload.activity < rule.limit_for(p.node_id):
                onset = ts - p.payload.still_s
                state.low_since = onset if state.low_since is None else min(state.low_since, onset)
                if state.armed and ts - state.low_since >= rule.window_s - _TIME_EPS:
                    state.armed = False
                    return (min(state.low_since + rule.window_s, ts), ts)
            else:
                state.low_since = None
                state.armed = True
    return None


@dataclass(frozen=True)
class PipelineDelays:
    airtime_s: float = 0.0
    backhaul_s: float = 0.0
    processing_s: float = 0.0

    def __post_init__(self) -> None:
        if min(self.airtime_s, self.backhaul_s, self.processing_s) < 0:
            msg = "pipeline delays must be >= 0 s"
            raise DomainError(msg)

    @property
    def total(self) -> float:
        return self.airtime_s + self.backhaul_s + self.processing_s


def next_uplink_after(trigger_s: float, phase_s: float, interval_s: float) -> float:
    """First scheduled uplink at or after `trigger_s` for a node with the given phase."""
    k = math.ceil((trigger_s - phase_s) / interval_s)
    return phase_s + max(k, 0) * interval_s


def alert_latency(trigger_s: float, next_uplink_s: float, delays: PipelineDelays) -> float:
    """Wait for the next uplink plus airtime, backhaul and cloud processing."""
    if next_uplink_s < trigger_s:
        msg = "the carrying uplink cannot precede the anomaly"
        raise DomainError(msg)
    return (next_uplink_s - trigger_s) + delays.total


# ============================================================================
# Behaviour features
# ============================================================================


@dataclass(frozen=True)
class BehaviorFeature:
    animal_id: int
    mean_activity: float
    activity_var: float
    mean_temp: float
    distance_m: float

    def vector(self) -> tuple[float, float, float, float]:
        return (self.mean_activity, self.activity_var, self.mean_temp, self.distance_m)


def behavior_features(packets: Iterable[Packet]) -> list[BehaviorFeature]:
    """Per-animal aggregates over a time-ordered delivered stream."""
    by_animal: dict[int, list[Packet]] = defaultdict(list)
    for p in packets:
        by_animal[p.node_id].append(p)
    features: list[BehaviorFeature] = []
    for animal in sorted(by_animal):
        stream = sorted(by_animal[animal], key=lambda p: p.timestamp)
        activity = np.array([p.payload.activity for p in stream])
        temps = np.array([p.payload.body_temp for p in stream])
        xy = np.array([(p.payload.x, p.payload.y) for p in stream])
        steps = np.hypot(*np.diff(xy, axis=0).T) if len(stream) > 1 else np.zeros(0)
        features.append(
            BehaviorFeature(
                animal_id=animal,
                mean_activity=float(activity.mean()),
                activity_var=float(activity.var()),
                mean_temp=float(temps.mean()),
                distance_m=float(steps.sum()),
            )
        )
    return features


def feature_matrix(features: Sequence[BehaviorFeature] | ArrayLike) -> NDArray[np.float64]:
    if isinstance(features, Sequence) and features and isinstance(features[0], BehaviorFeature):
        rows = [f.vector() for f in features]  # type: ignore[union-attr]
        return np.array(rows, dtype=np.float64)
    matrix = np.asarray(features, dtype=np.float64)
    return matrix.reshape(len(matrix), -1)


# ============================================================================
# Clustering and outliers
# ============================================================================


@dataclass(frozen=True)
class KMeansResult:
    labels: NDArray[np.int64]
    centroids: NDArray[np.float64]
    wcss: float
    history: tuple[float, ...]
    """Within-cluster sum of squares after every assignment step."""
    iterations: int


def kmeans_cluster(
    features: Sequence[BehaviorFeature] | ArrayLike,
    k: int,
    seed: int,
    *,
    standardize: bool = True,
    tol: float = 1e-8,
    max_iter: int = 300,
) -> KMeansResult:
    """
    Lloyd's k-means with k-means++ seeding.

    Features are z-scored per dimension first (unless `standardize` is off)
    and centroids are reported in that space. Empty clusters keep their
    previous centroid, so the objective never increases.

    Raises:
        DomainError: If k < 1 or k exceeds the number of points
    """
    x = feature_matrix(features)
    if k < 1 or k > len(x):
        msg = f"k must be within 1..{len(x)}, got {k}"
        raise DomainError(msg)
    if standardize:
        x = StandardScaler().fit_transform(x)
    centroids, _ = kmeans_plusplus(x, n_clusters=k, random_state=seed % 2**32)

    history: list[float] = []
    labels = np.zeros(len(x), dtype=np.int64)
    iterations = 0
    for iterations in range(1, max_iter + 1):  # noqa: B007
        d2 = cdist(x, centroids, "sqeuclidean")
        labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(x)), labels].sum()))
        updated = centroids.copy()
        for j in range(k):
            members = x[labels == j]
            if len(members):
                updated[j] = members.mean(axis=0)
        shift = float(np.max(np.linalg.norm(updated - centroids, axis=1)))
        centroids = updated
        if shift <= tol:
            break

    d2 = cdist(x, centroids, "sqeuclidean")
    labels = np.argmin(d2, axis=1)
    wcss = float(d2[np.arange(len(x)), labels].sum())
    history.append(wcss)
    return KMeansResult(labels, centroids, wcss, tuple(history), iterations)


def zscore_norms(features: Sequence[BehaviorFeature]) -> NDArray[np.float64]:
    x = feature_matrix(features)
    z = StandardScaler().fit_transform(x)
    return np.linalg.norm(z, axis=1)


def zscore_outliers(features: Sequence[BehaviorFeature], threshold: float) -> list[int]:
    """
    Animals whose per-dimension z-score vector has norm above `threshold`.

    Raises:
        DomainError: Fewer than three animals or a non-positive threshold
    """
    if len(features) < 3:  # noqa: PLR2004
        msg = f"z-score flagging needs at least 3 animals, got {len(features)}"
        raise DomainError(msg)
    if not threshold > 0:
        msg = f"threshold must be > 0 sigma, got {threshold}"
        raise DomainError(msg)
    x = feature_matrix(features)
    if np.all(x.std(axis=0) == 0):
        logger.warning("every feature has zero variance across %d animals", len(features))
        return []
    norms = zscore_norms(features)
    return [f.animal_id for f, norm in zip(features, norms, strict=True) if norm > threshold]


# ============================================================================
# Scoring
# ============================================================================


def _checked(
    scores: Sequence[float], labels: Sequence[int]
) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if s.shape != y.shape:
        msg = f"{len(s)} scores for {len(y)} labels"
        raise DomainError(msg)
    if not np.isin(y, (0, 1)).all():
        msg = "labels must be 0 or 1"
        raise DomainError(msg)
    if len(np.unique(y)) < 2:  # noqa: PLR2004
        msg = "AUROC is undefined unless both classes are present"
        raise UndefinedMetricError(msg)
    return s, y


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Probability that a random positive outscores a random negative (ties count half)."""
    s, y = _checked(scores, labels)
    return float(roc_auc_score(y, s))


def roc_curve_points(scores: Sequence[float], labels: Sequence[int]) -> list[tuple[float, float]]:
    s, y = _checked(scores, labels)
    fpr, tpr, _ = roc_curve(y, s, drop_intermediate=False)
    return [(float(a), float(b)) for a, b in zip(fpr, tpr, strict=True)]


def synthetic_auroc(features: Sequence[BehaviorFeature], anomalous: Iterable[int]) -> float:
    """Score animals by z-score norm and rate the ranking against known anomalies."""
    flagged = set(anomalous)
    labels = [int(f.animal_id in flagged) for f in features]
    return auroc(zscore_norms(features).tolist(), labels)


def composite_score(
    table: Mapping[str, Mapping[str, float]], lower_is_better: Iterable[str] = ()
) -> dict[str, float]:
    """
    Normalized 0..1 score per system, averaged over metrics.

    `table` maps metric -> system -> value. Each metric is min-max scaled
    across systems (inverted where lower is better); a metric on which all
    systems tie contributes 1 to everyone.
    """
    inverted = set(lower_is_better)
    totals: dict[str, float] = defaultdict(float)
    for metric, values in table.items():
        lo, hi = min(values.values()), max(values.values())
        for system, value in values.items():
            scaled = 1.0 if hi == lo else (value - lo) / (hi - lo)
            totals[system] += 1.0 - scaled if metric in inverted and hi != lo else scaled
    return {system: total / len(table) for system, total in sorted(totals.items())}


__all__ = [
    "AlertEvent",
    "AlertRule",
    "BehaviorFeature",
    "KMeansResult",
    "PipelineDelays",
    "alert_latency",
    "auroc",
    "behavior_features",
    "composite_score",
    "evaluate_rules",
    "feature_matrix",
    "kmeans_cluster",
    "next_uplink_after",
    "roc_curve_points",
    "synthetic_auroc",
    "zscore_norms",
    "zscore_outliers",
]
