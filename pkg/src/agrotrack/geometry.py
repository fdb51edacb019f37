"""
Planar geometry for fields, obstructions and geofences.

Polygons are vertex tuples in metres. Points on a polygon's boundary count as
inside.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np

type Point = tuple[float, float]

_EPS = 1e-9


def _cross(o: Point, a: Point, b: Point) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _on_segment(p: Point, a: Point, b: Point) -> bool:
    return (
        abs(_cross(a, b, p)) <= _EPS * max(1.0, math.dist(a, b))
        and min(a[0], b[0]) - _EPS <= p[0] <= max(a[0], b[0]) + _EPS
        and min(a[1], b[1]) - _EPS <= p[1] <= max(a[1], b[1]) + _EPS
    )


def segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    """Closed-segment intersection test, touching and collinear overlap included."""
    d1 = _cross(q1, q2, p1)
    d2 = _cross(q1, q2, p2)
    d3 = _cross(p1, p2, q1)
    d4 = _cross(p1, p2, q2)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    return (
        _on_segment(p1, q1, q2)
        or _on_segment(p2, q1, q2)
        or _on_segment(q1, p1, p2)
        or _on_segment(q2, p1, p2)
    )


@dataclass(frozen=True)
class Polygon:
    vertices: tuple[Point, ...]

    @classmethod
    def of(cls, points: Sequence[Sequence[float]]) -> "Polygon":
        return cls(tuple((float(p[0]), float(p[1])) for p in points))

    @classmethod
    def rectangle(cls, x0: float, y0: float, x1: float, y1: float) -> "Polygon":
        return cls(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))

    @cached_property
    def edges(self) -> tuple[tuple[Point, Point], ...]:
        v = self.vertices
        return tuple((v[i], v[(i + 1) % len(v)]) for i in range(len(v)))

    @cached_property
    def signed_area(self) -> float:
        return 0.5 * math.fsum(a[0] * b[1] - b[0] * a[1] for a, b in self.edges)

    @property
    def area(self) -> float:
        return abs(self.signed_area)

    @cached_property
    def centroid(self) -> Point:
        a = self.signed_area
        if a == 0:
            xs, ys = zip(*self.vertices, strict=True)
            return (sum(xs) / len(xs), sum(ys) / len(ys))
        cx = math.fsum((p[0] + q[0]) * (p[0] * q[1] - q[0] * p[1]) for p, q in self.edges)
        cy = math.fsum((p[1] + q[1]) * (p[0] * q[1] - q[0] * p[1]) for p, q in self.edges)
        return (cx / (6.0 * a), cy / (6.0 * a))

    @cached_property
    def bounds(self) -> tuple[float, float, float, float]:
        xs, ys = zip(*self.vertices, strict=True)
        return (min(xs), min(ys), max(xs), max(ys))

    def is_convex(self) -> bool:
        signs = {
            _cross(a, b, self.vertices[(i + 2) % len(self.vertices)]) > 0
            for i, (a, b) in enumerate(self.edges)
            if abs(_cross(a, b, self.vertices[(i + 2) % len(self.vertices)])) > _EPS
        }
        return len(self.vertices) >= 3 and len(signs) <= 1  # noqa: PLR2004

    def contains(self, p: Point) -> bool:
        """Even-odd rule with the boundary counted as inside."""
        if any(_on_segment(p, a, b) for a, b in self.edges):
            return True
        inside = False
        x, y = p
        for (x1, y1), (x2, y2) in self.edges:
            if (y1 > y) != (y2 > y):
                x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                if x < x_cross:
                    inside = not inside
        return inside

    def contains_polygon(self, other: "Polygon") -> bool:
        return all(self.contains(v) for v in other.vertices)

    def intersects_segment(self, a: Point, b: Point) -> bool:
        """True if the segment crosses, touches or lies inside the polygon."""
        if self.contains(a) or self.contains(b):
            return True
        return any(segments_intersect(a, b, p, q) for p, q in self.edges)

    def scaled(self, factor: float, origin: Point | None = None) -> "Polygon":
        """Scale about `origin` (the centroid by default)."""
        ox, oy = origin if origin is not None else self.centroid
        return Polygon(
            tuple((ox + (x - ox) * factor, oy + (y - oy) * factor) for x, y in self.vertices)
        )

    def sample_point(self, rng: np.random.Generator) -> Point:
        """Uniform point inside the polygon by rejection from its bounding box."""
        x0, y0, x1, y1 = self.bounds
        while True:
            x, y = rng.uniform(x0, x1), rng.uniform(y0, y1)
            if self.contains((float(x), float(y))):
                return (float(x), float(y))


__all__ = ["Point", "Polygon", "segments_intersect"]
