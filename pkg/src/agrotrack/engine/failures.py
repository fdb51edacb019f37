"""
Gateway outage plans.
"""

import logging
from collections.abc import Iterable, Sequence

from agrotrack.engine.scenario import Outage

logger = logging.getLogger(__name__)


def normalize_plan(plan: Iterable[Outage]) -> tuple[Outage, ...]:
    """
    Sort outages and merge overlapping or touching windows per gateway.

    Merging is logged at WARNING; it never fails.
    """
    by_gateway: dict[int, list[Outage]] = {}
    for outage in sorted(plan, key=lambda o: (o.gateway, o.start_s, o.end_s)):
        windows = by_gateway.setdefault(outage.gateway, [])
        if windows and outage.start_s <= windows[-1].end_s:
            last = windows[-1]
            logger.warning(
                "gateway %d: merging overlapping outages [%g, %g) and [%g, %g)",
                outage.gateway,
                last.start_s,
                last.end_s,
                outage.start_s,
                outage.end_s,
            )
            windows[-1] = Outage(last.gateway, last.start_s, max(last.end_s, outage.end_s))
        else:
            windows.append(outage)
    return tuple(o for g in sorted(by_gateway) for o in by_gateway[g])


def inject_failures(plan: Sequence[Outage], time: float, gateway_count: int) -> frozenset[int]:
    """Gateways alive at `time`; a gateway is dead during each [start, end) of the plan."""
    dead = {o.gateway for o in plan if o.start_s <= time < o.end_s}
    return frozenset(g for g in range(gateway_count) if g not in dead)


__all__ = ["inject_failures", "normalize_plan"]
