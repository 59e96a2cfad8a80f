"""Mission state machine and controllers.

Waypoint sequencing, visibility-graph route planning, pure-pursuit path
following, reactive ultrasonic avoidance, detection-triggered treatment,
return-to-home and manual-override arbitration.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field

from .detection import Detection, DetectorProfile, CLASS_BREEDING_SITE, bearing_from_offset, center_offset
from .environment import CircleObstacle, PolygonObstacle, WorldMap
from .geometry import (
    Point,
    bearing_to,
    dist,
    point_in_polygon,
    point_segment_distance,
    polygon_centroid,
    segments_intersect,
    wrap_angle,
)
from .rover import ControlCommand, Mode, RoverParams, RoverState


class PlanningError(Exception):
    """A waypoint could not be connected through the free space."""


class FsmState(enum.IntEnum):
    IDLE = 0
    NAVIGATE = 1
    INSPECT = 2
    TREAT = 3
    RTL = 4
    DONE = 5
    FAULT = 6


@dataclass(frozen=True)
class ControllerGains:
    """Tunable controller knobs; scenario ``mission`` lines may override."""

    lookahead_m: float = 0.5
    cruise_frac: float = 0.9
    approach_frac: float = 0.35
    align_gain: float = 2.5
    avoid_threshold_m: float = 0.5
    avoid_turn_frac: float = 0.8
    debounce_ticks: int = 3
    stuck_timeout_s: float = 8.0
    leg_timeout_s: float = 45.0
    treat_timeout_s: float = 12.0
    spray_cooldown_s: float = 2.0
    home_radius_m: float = 0.5
    inflation_m: float = 0.3
    site_radius_hint_m: float = 0.4
    manual_timeout_s: float = 1.0


@dataclass
class Mission:
    waypoints: list[int]
    home: Point
    treat_on_detect: bool = True
    detect_confidence_threshold: float = 0.5
    gains: ControllerGains = field(default_factory=ControllerGains)

    def validate(self, world: WorldMap) -> None:
        known = {node.id for node in world.nodes}
        for wp in self.waypoints:
            if wp not in known:
                raise ValueError(f"mission waypoint {wp} does not resolve to a map node")
        if not (0.0 <= self.detect_confidence_threshold <= 1.0):
            raise ValueError("detect_confidence_threshold must be in [0, 1]")


@dataclass
class MissionStatus:
    fsm_state: FsmState = FsmState.IDLE
    current_waypoint_index: int = 0
    nodes_reached: list[int] = field(default_factory=list)
    nodes_skipped: list[int] = field(default_factory=list)
    sites_treated: list[int] = field(default_factory=list)
    start_clock_s: float = 0.0
    end_clock_s: float | None = None


# --- route planning -------------------------------------------------------

_CIRCLE_SIDES = 16


def _inflated_polygons(world: WorldMap, inflation: float) -> list[list[Point]]:
    """Obstacles grown by ``inflation`` and polygonized for the graph."""
    polys: list[list[Point]] = []
    for obs in world.obstacles:
        if isinstance(obs, CircleObstacle):
            big = (obs.radius + inflation) / math.cos(math.pi / _CIRCLE_SIDES)
            poly = [
                (
                    obs.center[0] + big * math.cos(2 * math.pi * k / _CIRCLE_SIDES),
                    obs.center[1] + big * math.sin(2 * math.pi * k / _CIRCLE_SIDES),
                )
                for k in range(_CIRCLE_SIDES)
            ]
            polys.append(poly)
        else:
            cx, cy = polygon_centroid(obs.vertices)
            poly = []
            for vx, vy in obs.vertices:
                dx, dy = vx - cx, vy - cy
                norm = math.hypot(dx, dy)
                if norm < 1e-9:
                    poly.append((vx, vy))
                else:
                    # bisector offset; slightly conservative vs. the true
                    # disc Minkowski sum, which is what we want
                    scale = (norm + inflation * 1.5) / norm
                    poly.append((cx + dx * scale, cy + dy * scale))
            polys.append(poly)
    return polys


def _point_in_any(p: Point, polys: list[list[Point]], skip: int = -1) -> bool:
    return any(i != skip and point_in_polygon(p, poly) for i, poly in enumerate(polys))


def _segment_blocked(a: Point, b: Point, polys: list[list[Point]]) -> bool:
    """True if segment ab enters the interior of any inflated obstacle."""
    for poly in polys:
        cx, cy = polygon_centroid(poly)
        shrunk = [(x + (cx - x) * 1e-6, y + (cy - y) * 1e-6) for x, y in poly]
        n = len(shrunk)
        for i in range(n):
            if segments_intersect(a, b, shrunk[i], shrunk[(i + 1) % n]):
                return True
        mid = ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
        if point_in_polygon(mid, shrunk):
            return True
    return False


def plan_leg(world: WorldMap, start: Point, goal: Point, inflation: float) -> list[Point]:
    """Shortest collision-free polyline from start to goal.

    Visibility graph over inflated obstacle outlines, searched with Dijkstra.
    Raises PlanningError when no connection exists.
    """
    polys = _inflated_polygons(world, inflation)
    if not _segment_blocked(start, goal, polys):
        return [start, goal]

    vertices: list[Point] = [start, goal]
    for i, poly in enumerate(polys):
        for v in poly:
            if world.contains(v) and not _point_in_any(v, polys, skip=i):
                vertices.append(v)

    n = len(vertices)
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if not _segment_blocked(vertices[i], vertices[j], polys):
                d = dist(vertices[i], vertices[j])
                adj[i].append((j, d))
                adj[j].append((i, d))

    best = [math.inf] * n
    prev = [-1] * n
    best[0] = 0.0
    heap: list[tuple[float, int]] = [(0.0, 0)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > best[u]:
            continue
        if u == 1:
            break
        for v, w in adj[u]:
            nd = d + w
            if nd < best[v] - 1e-12:
                best[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    if math.isinf(best[1]):
        raise PlanningError("goal not reachable through free space")
    path = []
    u = 1
    while u != -1:
        path.append(vertices[u])
        u = prev[u]
    path.reverse()
    return path


def plan_route(world: WorldMap, mission: Mission, start: Point) -> list[Point]:
    """Piecewise-linear path visiting mission waypoints in order."""
    mission.validate(world)
    path: list[Point] = [start]
    cursor = start
    for wp in mission.waypoints:
        node = world.node_by_id(wp)
        try:
            leg = plan_leg(world, cursor, node.center, mission.gains.inflation_m)
        except PlanningError as exc:
            raise PlanningError(f"waypoint {wp} unreachable: {exc}") from exc
        path.extend(leg[1:])
        cursor = node.center
    return path


# --- arbitration ----------------------------------------------------------

_ZERO = ControlCommand()


def arbitrate(auto_cmd: ControlCommand, manual: ControlCommand | None, mode: Mode) -> ControlCommand:
    """Pick the command that drives the plant this tick.

    In MANUAL mode a present manual command wins verbatim; silence yields the
    dead-man stop. In every other mode the autonomy command passes through.
    """
    if mode == Mode.MANUAL:
        return manual if manual is not None else _ZERO
    return auto_cmd


# --- mission controller ---------------------------------------------------


def _best_site_detection(detections: list[Detection], threshold: float) -> Detection | None:
    best: Detection | None = None
    for det in detections:
        if det.class_id != CLASS_BREEDING_SITE or det.confidence < threshold:
            continue
        if best is None or det.confidence > best.confidence:
            best = det
    return best


class MissionController:
    """Owns the mission FSM and produces one ControlCommand per tick.

    All decision-relevant memory lives in MissionStatus and a handful of
    deterministic scratch fields; identical inputs replay identically.
    """

    def __init__(
        self,
        world: WorldMap,
        mission: Mission,
        params: RoverParams,
        profile: DetectorProfile,
    ) -> None:
        self.world = world
        self.mission = mission
        self.params = params
        self.profile = profile
        self.gains = mission.gains
        self.status = MissionStatus()
        self._leg_path: list[Point] | None = None
        self._leg_target: Point | None = None
        self._pursuit_idx = 0
        self._best_leg_dist = math.inf
        self._best_leg_clock = 0.0
        self._leg_start_clock = 0.0
        self._detect_streak = 0
        self._cooldown_until = -1.0
        self._treat_entry_clock = 0.0
        self._last_tick_clock: float | None = None

    # -- helpers

    def _cruise(self) -> float:
        return self.gains.cruise_frac * self.params.max_speed

    def _plan_to(self, start: Point, goal: Point, clock_s: float) -> None:
        try:
            self._leg_path = plan_leg(self.world, start, goal, self.gains.inflation_m)
        except PlanningError:
            self._leg_path = [start, goal]  # let the reactive layer try
        self._leg_target = goal
        self._pursuit_idx = 0
        self._best_leg_dist = math.inf
        self._best_leg_clock = clock_s
        self._leg_start_clock = clock_s

    def _resume_navigate(self, state: RoverState) -> None:
        """Back to path following; a treatment detour is not "stuck" time."""
        self.status.fsm_state = FsmState.NAVIGATE
        self._best_leg_clock = state.clock_s
        self._leg_start_clock = state.clock_s
        self._detect_streak = 0

    def _current_node(self):
        idx = self.status.current_waypoint_index
        if idx >= len(self.mission.waypoints):
            return None
        return self.world.node_by_id(self.mission.waypoints[idx])

    def _advance_waypoint(self, state: RoverState, reached: bool) -> None:
        node = self._current_node()
        if node is not None:
            if reached:
                self.status.nodes_reached.append(node.id)
            else:
                self.status.nodes_skipped.append(node.id)
        self.status.current_waypoint_index += 1
        nxt = self._current_node()
        if nxt is None:
            self.status.fsm_state = FsmState.RTL
            self._plan_to(state.position, self.mission.home, state.clock_s)
        else:
            self._plan_to(state.position, nxt.center, state.clock_s)

    def _pursue(self, state: RoverState, speed: float) -> ControlCommand:
        path = self._leg_path or [state.position]
        pos = state.position
        while self._pursuit_idx < len(path) - 1 and dist(pos, path[self._pursuit_idx]) < self.gains.lookahead_m:
            self._pursuit_idx += 1
        target = path[min(self._pursuit_idx, len(path) - 1)]
        alpha = wrap_angle(bearing_to(pos, target) - state.heading)
        if abs(alpha) > math.pi / 2:
            return ControlCommand(0.0, math.copysign(self.params.max_turn_rate, alpha))
        goal_dist = dist(pos, self._leg_target) if self._leg_target else dist(pos, target)
        v = min(speed, max(0.15 * self.params.max_speed, 1.2 * goal_dist))
        omega = 2.0 * v * math.sin(alpha) / self.gains.lookahead_m
        omega = max(-self.params.max_turn_rate, min(self.params.max_turn_rate, omega))
        return ControlCommand(v, omega)

    def _avoidance(self, sensors: list[tuple[float, float]]) -> ControlCommand | None:
        """Threshold turn-away on any forward-sector reading."""
        forward = [(b, d) for b, d in sensors if abs(b) <= math.pi / 3]
        if not forward:
            return None
        blocked = [(b, d) for b, d in forward if d < self.gains.avoid_threshold_m]
        if not blocked:
            return None
        left = min((d for b, d in sensors if b > 1e-9), default=math.inf)
        right = min((d for b, d in sensors if b < -1e-9), default=math.inf)
        turn = self.gains.avoid_turn_frac * self.params.max_turn_rate
        return ControlCommand(0.0, turn if left >= right else -turn)

    def _steer_to_detection(self, state: RoverState, det: Detection, speed: float) -> ControlCommand:
        offset = center_offset(det, self.profile.frame_width)
        bearing = bearing_from_offset(offset, self.profile.focal_px)
        v = 0.0 if abs(bearing) > 0.6 else speed
        omega = self.gains.align_gain * bearing
        omega = max(-self.params.max_turn_rate, min(self.params.max_turn_rate, omega))
        return ControlCommand(v, omega)

    def _estimated_distance(self, det: Detection) -> float:
        width = max(det.box.width, 1.0)
        return self.profile.focal_px * (2.0 * self.gains.site_radius_hint_m) / width

    def _can_treat(self, state: RoverState) -> bool:
        return (
            self.mission.treat_on_detect
            and state.reservoir_ml >= self.params.spray_dose_ml
            and state.clock_s >= self._cooldown_until
        )

    # -- the per-tick decision

    def tick(
        self,
        state: RoverState,
        sensors: list[tuple[float, float]],
        detections: list[Detection],
    ) -> ControlCommand:
        status = self.status
        if status.fsm_state in (FsmState.DONE, FsmState.FAULT):
            return _ZERO
        if state.mode == Mode.FAULT:
            status.fsm_state = FsmState.FAULT
            return _ZERO

        # a gap in ticks means autonomy was paused (manual override);
        # restart the no-progress clocks so the pause is not counted
        if self._last_tick_clock is not None and state.clock_s - self._last_tick_clock > 0.5:
            self._best_leg_clock = state.clock_s
            self._treat_entry_clock = state.clock_s
        self._last_tick_clock = state.clock_s

        if status.fsm_state == FsmState.IDLE:
            status.start_clock_s = state.clock_s
            if not self.mission.waypoints:
                status.fsm_state = FsmState.RTL
                self._plan_to(state.position, self.mission.home, state.clock_s)
            else:
                status.fsm_state = FsmState.NAVIGATE
                node = self._current_node()
                assert node is not None
                self._plan_to(state.position, node.center, state.clock_s)

        if status.fsm_state == FsmState.NAVIGATE:
            return self._tick_navigate(state, sensors, detections)
        if status.fsm_state == FsmState.INSPECT:
            return self._tick_inspect(state, sensors, detections)
        if status.fsm_state == FsmState.TREAT:
            return self._tick_treat(state, sensors, detections)
        if status.fsm_state == FsmState.RTL:
            return self._tick_rtl(state, sensors)
        return _ZERO

    def _tick_navigate(
        self,
        state: RoverState,
        sensors: list[tuple[float, float]],
        detections: list[Detection],
    ) -> ControlCommand:
        node = self._current_node()
        if node is None:
            self.status.fsm_state = FsmState.RTL
            self._plan_to(state.position, self.mission.home, state.clock_s)
            return self._tick_rtl(state, sensors)

        d_node = dist(state.position, node.center)
        if d_node <= node.acceptance_radius:
            self._advance_waypoint(state, reached=True)
            if self.status.fsm_state == FsmState.RTL:
                return self._tick_rtl(state, sensors)
            return self._pursue(state, self._cruise())

        # no-progress watchdog plus a hard per-leg budget: give up on a
        # blocked checkpoint rather than orbit it forever
        if d_node < self._best_leg_dist - 1e-3:
            self._best_leg_dist = d_node
            self._best_leg_clock = state.clock_s
        stuck = state.clock_s - self._best_leg_clock > self.gains.stuck_timeout_s
        over_budget = state.clock_s - self._leg_start_clock > self.gains.leg_timeout_s
        if stuck or over_budget:
            self._advance_waypoint(state, reached=False)
            if self.status.fsm_state == FsmState.RTL:
                return self._tick_rtl(state, sensors)
            return self._pursue(state, self._cruise())

        if self._can_treat(state):
            det = _best_site_detection(detections, self.mission.detect_confidence_threshold)
            if det is not None:
                self.status.fsm_state = FsmState.INSPECT
                self._detect_streak = 1
                self._treat_entry_clock = state.clock_s
                return self._steer_to_detection(state, det, self.gains.approach_frac * self.params.max_speed)

        avoid = self._avoidance(sensors)
        if avoid is not None:
            return avoid
        return self._pursue(state, self._cruise())

    def _tick_inspect(
        self,
        state: RoverState,
        sensors: list[tuple[float, float]],
        detections: list[Detection],
    ) -> ControlCommand:
        det = _best_site_detection(detections, self.mission.detect_confidence_threshold)
        if det is None or not self._can_treat(state):
            self._resume_navigate(state)
            return self._tick_navigate(state, sensors, detections)
        self._detect_streak += 1
        if self._detect_streak >= self.gains.debounce_ticks:
            self.status.fsm_state = FsmState.TREAT
            return self._tick_treat(state, sensors, detections)
        return self._steer_to_detection(state, det, self.gains.approach_frac * self.params.max_speed)

    def _tick_treat(
        self,
        state: RoverState,
        sensors: list[tuple[float, float]],
        detections: list[Detection],
    ) -> ControlCommand:
        if state.clock_s - self._treat_entry_clock > self.gains.treat_timeout_s:
            self._cooldown_until = state.clock_s + self.gains.spray_cooldown_s
            self._resume_navigate(state)
            return self._tick_navigate(state, sensors, detections)
        det = _best_site_detection(detections, self.mission.detect_confidence_threshold)
        if det is None or not self._can_treat(state):
            self._resume_navigate(state)
            return self._tick_navigate(state, sensors, detections)
        if self._estimated_distance(det) <= 0.95 * self.params.spray_range_m:
            self._cooldown_until = state.clock_s + self.gains.spray_cooldown_s
            self._resume_navigate(state)
            cmd = self._steer_to_detection(state, det, 0.0)
            return ControlCommand(0.0, cmd.angular, spray_trigger=True)
        avoid = self._avoidance(sensors)
        if avoid is not None:
            return avoid
        return self._steer_to_detection(state, det, self.gains.approach_frac * self.params.max_speed)

    def _tick_rtl(self, state: RoverState, sensors: list[tuple[float, float]]) -> ControlCommand:
        if dist(state.position, self.mission.home) <= self.gains.home_radius_m:
            self.status.fsm_state = FsmState.DONE
            self.status.end_clock_s = state.clock_s
            return _ZERO
        if self._leg_target != self.mission.home:
            self._plan_to(state.position, self.mission.home, state.clock_s)
        d_home = dist(state.position, self.mission.home)
        if d_home < self._best_leg_dist - 1e-3:
            self._best_leg_dist = d_home
            self._best_leg_clock = state.clock_s
        elif state.clock_s - self._best_leg_clock > self.gains.stuck_timeout_s:
            # replan and retry; home is never skippable
            self._plan_to(state.position, self.mission.home, state.clock_s)
        avoid = self._avoidance(sensors)
        if avoid is not None:
            return avoid
        return self._pursue(state, self._cruise())


def navigate_tick(
    state: RoverState,
    world: WorldMap,
    mission: Mission,
    status: MissionStatus,
    sensors: list[tuple[float, float]],
    detections: list[Detection],
    controller: MissionController | None = None,
    params: RoverParams | None = None,
    profile: DetectorProfile | None = None,
) -> tuple[ControlCommand, MissionStatus]:
    """One FSM decision step; functional wrapper over MissionController.

    Callers that need continuity across ticks should hold a controller and
    pass it back in; the wrapper seeds a fresh one otherwise.
    """
    if controller is None:
        controller = MissionController(world, mission, params or RoverParams(), profile or DetectorProfile())
        controller.status = status
    cmd = controller.tick(state, sensors, detections)
    return cmd, controller.status
