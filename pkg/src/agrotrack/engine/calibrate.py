"""
Fit the free constants of the bundled scenarios to the reference anchors.

The search runs single-parameter bisections in a fixed order: obstruction
coverage against the baseline delivery ratio, cloud service rate against the
plateau throughput, node buffer against the recovery ratio. Each search runs
over a fixed absolute range, so calibrating an already calibrated scenario
returns the same overlay.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from typing import Any, Final

from agrotrack import channel as ch
from agrotrack.engine.scenario import Document, Scenario
from agrotrack.engine.simulator import run
from agrotrack.engine.sweep import with_failures

logger = logging.getLogger(__name__)

_BISECTIONS: Final = 10


@dataclass(frozen=True)
class CalibrationTargets:
    pdr: float = 0.975
    throughput_msg_s: float = 75.0
    throughput_tolerance: float = 0.1
    recovery: float = 0.85
    recovery_tolerance: float = 0.02
    range_m: float = 6500.0
    range_success: float = 0.5
    plateau_count: int = 600


@dataclass(frozen=True)
class CalibrationResult:
    """Overlays per bundled scenario plus the signed residual of every target."""

    overlays: dict[str, Document]
    residuals: dict[str, float]
    feasible: bool
    evaluations: int = 0
    notes: tuple[str, ...] = field(default=())

    def to_document(self) -> dict[str, Any]:
        return {
            "overlays": self.overlays,
            "residuals": self.residuals,
            "feasible": self.feasible,
            "evaluations": self.evaluations,
            "notes": list(self.notes),
        }


def range_success(scenario: Scenario, distance_m: float) -> float:
    """Shadowing-averaged line-of-sight success at `distance_m` for the scenario's radio."""
    pl = ch.path_loss(ch.LinkSample(distance_m), scenario.channel)
    return ch.expected_success(ch.snr(pl, scenario.radio), scenario.channel, scenario.radio.sf)


def bisect_largest(
    ok: Callable[[float], bool], lo: float, hi: float, steps: int = _BISECTIONS
) -> float | None:
    """Largest x in [lo, hi] with `ok(x)`, assuming `ok` holds below a threshold."""
    if ok(hi):
        return hi
    if not ok(lo):
        return None
    for _ in range(steps):
        mid = (lo + hi) / 2.0
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def bisect_root(
    f: Callable[[float], float], lo: float, hi: float, steps: int = _BISECTIONS
) -> float:
    """Root of an increasing `f` on [lo, hi], or the nearer end if there is none."""
    if f(lo) >= 0:
        return lo
    if f(hi) <= 0:
        return hi
    for _ in range(steps):
        mid = (lo + hi) / 2.0
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def smallest_int(ok: Callable[[int], bool], lo: int, hi: int) -> int | None:
    """Smallest n in [lo, hi] with `ok(n)`, assuming `ok` is monotone."""
    if not ok(hi):
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def calibrate(  # noqa: PLR0913
    baseline: Scenario,
    scaling: Scenario,
    robustness: Scenario,
    targets: CalibrationTargets | None = None,
    *,
    service_bounds: tuple[float, float] = (10.0, 400.0),
    buffer_bounds: tuple[int, int] = (0, 64),
) -> CalibrationResult:
    """
    Search the three capacity knobs and check the range anchor.

    Returns a result whose `feasible` is False, with the best residuals found,
    when a target cannot be met inside the search bounds.
    """
    targets = targets or CalibrationTargets()
    evaluations = 0
    notes: list[str] = []

    def baseline_pdr(scale: float) -> float:
        nonlocal evaluations
        evaluations += 1
        sc = replace(baseline, field=replace(baseline.field, obstruction_scale=scale))
        return run(sc).pdr

    scale = bisect_largest(lambda s: baseline_pdr(s) >= targets.pdr, 0.0, 1.0)
    if scale is None:
        notes.append("baseline delivery target unmet even without obstructions")
        logger.warning(notes[-1])
        scale = 0.0
    pdr = baseline_pdr(scale)
    logger.info("obstruction scale %.4f gives PDR %.4f", scale, pdr)

    plateau = scaling.with_herd(targets.plateau_count)

    def throughput_gap(rate: float) -> float:
        nonlocal evaluations
        evaluations += 1
        sc = replace(plateau, cloud=replace(plateau.cloud, service_msg_s=rate))
        return run(sc).throughput_msg_s - targets.throughput_msg_s

    service = bisect_root(throughput_gap, *service_bounds)
    throughput_residual = throughput_gap(service)
    logger.info("cloud service %.3f msg/s, throughput residual %.3f", service, throughput_residual)

    failures = len({o.gateway for o in robustness.failure_plan})
    stressed = with_failures(robustness, failures)

    def recovery(buffer: int) -> float:
        nonlocal evaluations
        evaluations += 1
        return run(replace(stressed, node_buffer=buffer)).recovery_ratio

    buffer = smallest_int(lambda b: recovery(b) >= targets.recovery - 1e-9, *buffer_bounds)
    if buffer is None:
        notes.append(f"recovery target unmet with a {buffer_bounds[1]}-packet buffer")
        logger.warning(notes[-1])
        buffer = buffer_bounds[1]
    recovery_residual = recovery(buffer) - targets.recovery
    if buffer > buffer_bounds[0]:
        # recovery is a step function of the buffer; keep whichever side lands closer
        below = recovery(buffer - 1) - targets.recovery
        if abs(below) < abs(recovery_residual):
            buffer, recovery_residual = buffer - 1, below
    logger.info("node buffer %d, recovery residual %.4f", buffer, recovery_residual)

    reach = range_success(baseline, targets.range_m)
    residuals = {
        "pdr": pdr - targets.pdr,
        "throughput_msg_s": throughput_residual,
        "recovery": recovery_residual,
        "range_success": reach - targets.range_success,
    }
    feasible = (
        residuals["pdr"] >= 0
        and abs(throughput_residual) <= targets.throughput_tolerance * targets.throughput_msg_s
        and abs(recovery_residual) <= targets.recovery_tolerance
        and residuals["range_success"] >= 0
    )
    overlays: dict[str, Document] = {
        baseline.name: {"field": {"obstruction_scale": scale}},
        scaling.name: {"cloud": {"service_msg_s": service}},
        robustness.name: {"node_buffer": buffer},
    }
    return CalibrationResult(overlays, residuals, feasible, evaluations, tuple(notes))


__all__ = [
    "CalibrationResult",
    "CalibrationTargets",
    "bisect_largest",
    "bisect_root",
    "calibrate",
    "range_success",
    "smallest_int",
]
