"""World model: arena bounds, obstacles, breeding sites and checkpoint nodes.

The map is immutable after load except the ``active`` flag on breeding
sites, which only the simulation loop flips when a site is treated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import (
    Point,
    bearing_to,
    dist,
    is_convex,
    point_in_polygon,
    ray_aabb_exit,
    ray_circle,
    ray_segment,
    unit_from_angle,
    wrap_angle,
)


class ValidationError(ValueError):
    """A world or mission invariant was violated; message names it."""


@dataclass(frozen=True)
class CircleObstacle:
    center: Point
    radius: float


@dataclass(frozen=True)
class PolygonObstacle:
    vertices: tuple[Point, ...]


Obstacle = CircleObstacle | PolygonObstacle


@dataclass
class BreedingSite:
    """Standing-water site; ``pre_population`` is its pre-treatment head count."""

    id: int
    center: Point
    radius: float
    pre_population: int
    active: bool = True


@dataclass(frozen=True)
class CheckpointNode:
    id: int
    center: Point
    acceptance_radius: float


@dataclass
class WorldMap:
    bounds: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    home: Point
    obstacles: list[Obstacle] = field(default_factory=list)
    sites: list[BreedingSite] = field(default_factory=list)
    nodes: list[CheckpointNode] = field(default_factory=list)

    def contains(self, p: Point) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        return xmin <= p[0] <= xmax and ymin <= p[1] <= ymax

    def node_by_id(self, node_id: int) -> CheckpointNode:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(f"unknown node id {node_id}")

    def site_by_id(self, site_id: int) -> BreedingSite:
        for site in self.sites:
            if site.id == site_id:
                return site
        raise KeyError(f"unknown site id {site_id}")

    def point_in_obstacle(self, p: Point) -> bool:
        for obs in self.obstacles:
            if isinstance(obs, CircleObstacle):
                if dist(p, obs.center) <= obs.radius:
                    return True
            elif point_in_polygon(p, obs.vertices):
                return True
        return False

    def validate(self) -> None:
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmin < xmax and ymin < ymax):
            raise ValidationError(f"bounds must span a positive area, got {self.bounds}")
        if not self.contains(self.home):
            raise ValidationError(f"home {self.home} lies outside bounds")
        for i, obs in enumerate(self.obstacles):
            if isinstance(obs, CircleObstacle):
                if obs.radius <= 0:
                    raise ValidationError(f"obstacle {i}: radius must be > 0")
                if not all(
                    self.contains((obs.center[0] + dx, obs.center[1] + dy))
                    for dx, dy in ((obs.radius, 0), (-obs.radius, 0), (0, obs.radius), (0, -obs.radius))
                ):
                    raise ValidationError(f"obstacle {i} extends outside bounds")
            else:
                if len(obs.vertices) < 3 or not is_convex(obs.vertices):
                    raise ValidationError(
                        f"obstacle {i}: polygon needs >= 3 non-collinear vertices forming a convex shape"
                    )
                if not all(self.contains(v) for v in obs.vertices):
                    raise ValidationError(f"obstacle {i} extends outside bounds")
        seen_sites: set[int] = set()
        for site in self.sites:
            if site.id in seen_sites:
                raise ValidationError(f"duplicate site id {site.id}")
            seen_sites.add(site.id)
            if site.radius <= 0:
                raise ValidationError(f"site {site.id}: radius must be > 0")
            if site.pre_population < 1:
                raise ValidationError(f"site {site.id}: pre_population must be >= 1")
            if not self.contains(site.center):
                raise ValidationError(f"site {site.id} lies outside bounds")
        seen_nodes: set[int] = set()
        for node in self.nodes:
            if node.id in seen_nodes:
                raise ValidationError(f"duplicate node id {node.id}")
            seen_nodes.add(node.id)
            if node.acceptance_radius <= 0:
                raise ValidationError(f"node {node.id}: acceptance_radius must be > 0")
            if not self.contains(node.center):
                raise ValidationError(f"node {node.id} lies outside bounds")


def ray_distance(world: WorldMap, origin: Point, bearing: float, max_range: float) -> float:
    """Distance to the nearest obstacle or arena wall along ``bearing``.

    Clamped to ``max_range``; the walls act as implicit obstacles.
    """
    if max_range <= 0:
        raise ValueError("max_range must be > 0")
    direction = unit_from_angle(bearing)
    xmin, ymin, xmax, ymax = world.bounds
    best = ray_aabb_exit(origin, direction, (xmin, ymin), (xmax, ymax))
    for obs in world.obstacles:
        if isinstance(obs, CircleObstacle):
            t = ray_circle(origin, direction, obs.center, obs.radius)
            if t is not None and t < best:
                best = t
        else:
            verts = obs.vertices
            for i in range(len(verts)):
                t = ray_segment(origin, direction, verts[i], verts[(i + 1) % len(verts)])
                if t is not None and t < best:
                    best = t
    return min(best, max_range)


def sites_in_fov(
    world: WorldMap,
    pose: tuple[float, float, float],
    fov: float,
    view_range: float,
) -> list[tuple[BreedingSite, float, float]]:
    """Active sites whose centers fall inside the camera cone.

    Returns ``(site, relative_bearing, distance)`` tuples sorted by distance
    ascending; relative bearing is CCW-positive from the boresight.
    """
    if not (0.0 < fov <= math.pi):
        raise ValueError("fov must be in (0, pi]")
    if view_range <= 0:
        raise ValueError("range must be > 0")
    x, y, heading = pose
    half = fov / 2.0
    hits: list[tuple[BreedingSite, float, float]] = []
    for site in world.sites:
        if not site.active:
            continue
        d = dist((x, y), site.center)
        if d > view_range:
            continue
        rel = wrap_angle(bearing_to((x, y), site.center) - heading)
        if abs(rel) <= half:
            hits.append((site, rel, d))
    hits.sort(key=lambda h: h[2])
    return hits
