"""Planar geometry primitives shared by the world model, sensors and planner.

Conventions: lengths in meters, East-North plane, headings in radians
counter-clockwise from the +x axis. Points are plain ``(x, y)`` tuples.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

Point = tuple[float, float]

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a > math.pi:
        a -= TWO_PI
    elif a <= -math.pi:
        a += TWO_PI
    return a


def dist(a: Point, b: Point) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


def path_length(points: Sequence[Point]) -> float:
    return sum(dist(points[i], points[i + 1]) for i in range(len(points) - 1))


def bearing_to(origin: Point, target: Point) -> float:
    """Absolute bearing of ``target`` as seen from ``origin``."""
    return math.atan2(target[1] - origin[1], target[0] - origin[0])


def ray_circle(origin: Point, direction: Point, center: Point, radius: float) -> float | None:
    """Smallest non-negative ray parameter hitting the circle, or None.

    ``direction`` must be a unit vector. An origin inside the circle hits at 0.
    """
    ox, oy = origin[0] - center[0], origin[1] - center[1]
    if ox * ox + oy * oy <= radius * radius:
        return 0.0
    b = ox * direction[0] + oy * direction[1]
    c = ox * ox + oy * oy - radius * radius
    disc = b * b - c
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    t = -b - root
    if t >= 0.0:
        return t
    t = -b + root
    return t if t >= 0.0 else None


def ray_segment(origin: Point, direction: Point, a: Point, b: Point) -> float | None:
    """Smallest non-negative ray parameter hitting segment ab, or None."""
    rx, ry = direction
    sx, sy = b[0] - a[0], b[1] - a[1]
    denom = rx * sy - ry * sx
    qx, qy = a[0] - origin[0], a[1] - origin[1]
    if abs(denom) < 1e-12:
        return None  # parallel; grazing hits are picked up by neighbour edges
    t = (qx * sy - qy * sx) / denom
    u = (qx * ry - qy * rx) / denom
    if t >= 0.0 and -1e-12 <= u <= 1.0 + 1e-12:
        return t
    return None


def ray_aabb_exit(origin: Point, direction: Point, lo: Point, hi: Point) -> float:
    """Distance from an interior origin to the box boundary along the ray."""
    best = math.inf
    dx, dy = direction
    if dx > 1e-12:
        best = min(best, (hi[0] - origin[0]) / dx)
    elif dx < -1e-12:
        best = min(best, (lo[0] - origin[0]) / dx)
    if dy > 1e-12:
        best = min(best, (hi[1] - origin[1]) / dy)
    elif dy < -1e-12:
        best = min(best, (lo[1] - origin[1]) / dy)
    return max(best, 0.0)


def point_in_polygon(p: Point, vertices: Sequence[Point]) -> bool:
    """Even-odd test; boundary points count as inside within float noise."""
    x, y = p
    inside = False
    n = len(vertices)
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        if (ay > y) != (by > y):
            t = (y - ay) / (by - ay)
            if x < ax + t * (bx - ax):
                inside = not inside
    return inside


def is_convex(vertices: Sequence[Point]) -> bool:
    """True for a simple convex polygon with no three collinear neighbours."""
    n = len(vertices)
    if n < 3:
        return False
    sign = 0
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        cx, cy = vertices[(i + 2) % n]
        cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if abs(cross) < 1e-12:
            return False
        s = 1 if cross > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return True


def polygon_centroid(vertices: Sequence[Point]) -> Point:
    sx = sum(v[0] for v in vertices)
    sy = sum(v[1] for v in vertices)
    n = len(vertices)
    return (sx / n, sy / n)


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    ax, ay = a
    abx, aby = b[0] - ax, b[1] - ay
    apx, apy = p[0] - ax, p[1] - ay
    denom = abx * abx + aby * aby
    if denom < 1e-18:
        return math.hypot(apx, apy)
    t = max(0.0, min(1.0, (apx * abx + apy * aby) / denom))
    return math.hypot(apx - t * abx, apy - t * aby)


def segments_intersect(p1: Point, p2: Point, p3: Point, p4: Point) -> bool:
    """Proper or touching intersection of segments p1p2 and p3p4."""

    def orient(a: Point, b: Point, c: Point) -> float:
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_seg(a: Point, b: Point, c: Point) -> bool:
        return (
            min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12
            and min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12
        )

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    if abs(d1) < 1e-12 and on_seg(p3, p4, p1):
        return True
    if abs(d2) < 1e-12 and on_seg(p3, p4, p2):
        return True
    if abs(d3) < 1e-12 and on_seg(p1, p2, p3):
        return True
    if abs(d4) < 1e-12 and on_seg(p1, p2, p4):
        return True
    return False


def unit_from_angle(angle: float) -> Point:
    return (math.cos(angle), math.sin(angle))


def convex_hull(points: Iterable[Point]) -> list[Point]:
    """Andrew's monotone chain; returns CCW hull without the repeated point."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def half(seq: Sequence[Point]) -> list[Point]:
        out: list[Point] = []
        for p in seq:
            while len(out) >= 2:
                ox, oy = out[-2]
                ax, ay = out[-1]
                if (ax - ox) * (p[1] - oy) - (ay - oy) * (p[0] - ox) <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return lower[:-1] + upper[:-1]
