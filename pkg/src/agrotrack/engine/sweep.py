"""
Replicated parameter sweeps.

Replicate `r` of a sweep point always runs with the seed derived from the
base seed, the point and `r`, and results are collected in submission order,
so the table is identical for any number of worker processes.
"""

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from agrotrack.engine.rng import derive_seed
from agrotrack.engine.scenario import Scenario
from agrotrack.engine.simulator import MetricsReport, run
from agrotrack.errors import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepRow:
    """Replicate statistics at one sweep point (sample std, ddof=1)."""

    point: int
    replicates: int
    pdr_mean: float
    pdr_std: float
    loss_mean: float
    loss_std: float
    throughput_mean: float
    throughput_std: float
    collision_mean: float
    recovery_mean: float
    recovery_std: float


def _std(values: Sequence[float]) -> float:
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def summarize_replicates(point: int, reports: Sequence[MetricsReport]) -> SweepRow:
    pdr = [r.pdr for r in reports]
    loss = [r.loss for r in reports]
    throughput = [r.throughput_msg_s for r in reports]
    recovery = [r.recovery_ratio for r in reports]
    return SweepRow(
        point=point,
        replicates=len(reports),
        pdr_mean=float(np.mean(pdr)),
        pdr_std=_std(pdr),
        loss_mean=float(np.mean(loss)),
        loss_std=_std(loss),
        throughput_mean=float(np.mean(throughput)),
        throughput_std=_std(throughput),
        collision_mean=float(np.mean([r.collision_rate for r in reports])),
        recovery_mean=float(np.mean(recovery)),
        recovery_std=_std(recovery),
    )


def run_all(scenarios: Sequence[Scenario], jobs: int = 1) -> list[MetricsReport]:
    """Run scenarios, in worker processes when `jobs > 1`, keeping input order."""
    if jobs < 1:
        msg = f"jobs must be >= 1, got {jobs}"
        raise ValidationError([msg])
    if jobs == 1 or len(scenarios) < 2:  # noqa: PLR2004
        return [run(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, scenarios))


def _replicated(
    base: Scenario,
    points: Sequence[int],
    replicates: int,
    jobs: int,
    variant: Callable[[Scenario, int], Scenario],
    tag: str,
) -> list[SweepRow]:
    if replicates < 1:
        msg = f"replicates must be >= 1, got {replicates}"
        raise ValidationError([msg])
    scenarios = [
        variant(base, point).with_seed(derive_seed(base.seed, tag, point, r))
        for point in points
        for r in range(replicates)
    ]
    logger.info("%s sweep: %d points x %d replicates", tag, len(points), replicates)
    reports = run_all(scenarios, jobs)
    return [
        summarize_replicates(point, reports[i * replicates : (i + 1) * replicates])
        for i, point in enumerate(points)
    ]


def sweep(
    base: Scenario, counts: Sequence[int], replicates: int = 5, jobs: int = 1
) -> list[SweepRow]:
    """
    Herd-size sweep at constant density.

    Example:
        ```python
        rows = sweep(load_bundled("scaling"), [50, 100, 200], replicates=3)
        ```
    """
    problems = [f"herd size must be >= 1, got {n}" for n in counts if n < 1]
    if problems:
        raise ValidationError(problems)
    return _replicated(base, counts, replicates, jobs, lambda s, n: s.with_herd(n), "herd")


def with_failures(base: Scenario, failures: int) -> Scenario:
    """Keep the first `failures` gateways' outages of the base plan."""
    gateways = sorted({o.gateway for o in base.failure_plan})
    if not 0 <= failures <= len(gateways):
        msg = f"failures must be within 0..{len(gateways)}, got {failures}"
        raise ValidationError([msg])
    kept = set(gateways[:failures])
    return replace(base, failure_plan=tuple(o for o in base.failure_plan if o.gateway in kept))


def failure_sweep(
    base: Scenario, failures: Sequence[int], replicates: int = 5, jobs: int = 1
) -> list[SweepRow]:
    """Recovery against the number of simultaneously failed gateways."""
    for k in failures:
        with_failures(base, k)
    return _replicated(base, failures, replicates, jobs, with_failures, "failures")


__all__ = [
    "SweepRow",
    "failure_sweep",
    "run_all",
    "summarize_replicates",
    "sweep",
    "with_failures",
]
