"""
Herd state and random-waypoint movement.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from agrotrack.engine.scenario import MobilitySpec
from agrotrack.errors import DomainError
from agrotrack.geometry import Point, Polygon

# Upper bound on waypoint legs walked in one step
_MAX_LEGS = 10_000


@dataclass(frozen=True, slots=True)
class AnimalState:
    id: int
    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0
    body_temp: float = 38.6
    activity: float = 0.5
    battery_mah_remaining: float = 0.0
    waypoint: Point | None = None
    speed: float = 0.0
    pause_left: float = 0.0

    @property
    def position(self) -> Point:
        return (self.x, self.y)


def _next_leg(
    state: AnimalState, rng: np.random.Generator, field: Polygon, spec: MobilitySpec
) -> AnimalState:
    waypoint = field.sample_point(rng)
    speed = float(rng.uniform(spec.speed_min, spec.speed_max))
    return replace(state, waypoint=waypoint, speed=speed, pause_left=0.0)


def step_mobility(
    state: AnimalState,
    dt: float,
    rng: np.random.Generator,
    *,
    field: Polygon,
    spec: MobilitySpec,
) -> AnimalState:
    """
    Advance an animal by `dt` seconds of random-waypoint movement.

    The animal walks straight to its waypoint at the leg's speed, pauses on
    arrival for a uniformly drawn time, then picks a new waypoint uniformly in
    the field. Reaching the waypoint (or standing on it) enters the pause.
    """
    if dt <= 0:
        msg = f"dt must be > 0 s, got {dt}"
        raise DomainError(msg)
    if spec.model == "static":
        return replace(state, vx=0.0, vy=0.0)
    if state.waypoint is None:
        state = _next_leg(state, rng, field, spec)

    left = dt
    for _ in range(_MAX_LEGS):
        if state.pause_left > 0:
            used = min(state.pause_left, left)
            state = replace(state, pause_left=state.pause_left - used, vx=0.0, vy=0.0)
            left -= used
            if state.pause_left > 0 or left <= 0:
                break
            state = _next_leg(state, rng, field, spec)
            continue

        assert state.waypoint is not None
        wx, wy = state.waypoint
        distance = math.hypot(wx - state.x, wy - state.y)
        if distance == 0:
            pause = float(rng.uniform(spec.pause_min, spec.pause_max))
            state = replace(state, pause_left=pause, vx=0.0, vy=0.0)
            if pause == 0:
                state = _next_leg(state, rng, field, spec)
            continue
        if state.speed <= 0:
            state = replace(state, vx=0.0, vy=0.0)
            break
        ux, uy = (wx - state.x) / distance, (wy - state.y) / distance
        to_arrive = distance / state.speed
        if to_arrive <= left:
            state = replace(state, x=wx, y=wy, vx=0.0, vy=0.0)
            left -= to_arrive
            continue
        travel = state.speed * left
        state = replace(
            state,
            x=state.x + ux * travel,
            y=state.y + uy * travel,
            vx=ux * state.speed,
            vy=uy * state.speed,
        )
        break
    return state


__all__ = ["AnimalState", "step_mobility"]
