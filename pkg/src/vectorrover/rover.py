"""Rover plant: skid-steer kinematics, battery, sprayer and sensor sampling.

Six drive motors are abstracted to a unicycle model; battery drain is a
piecewise-constant current draw per operating regime. Only the simulation
loop mutates rover state; every op here returns a fresh snapshot.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, replace

from .environment import WorldMap, ray_distance
from .geometry import Point, dist, wrap_angle

_EPS = 1e-12


class Mode(enum.IntEnum):
    IDLE = 0
    AUTO = 1
    MANUAL = 2
    RTL = 3
    DONE = 4
    FAULT = 5


@dataclass(frozen=True)
class RoverParams:
    max_speed: float = 1.0              # m/s
    max_turn_rate: float = 1.6          # rad/s
    wheelbase: float = 0.3              # m
    battery_capacity_mah: float = 3000.0
    drive_draw_ma: float = 2000.0
    idle_draw_ma: float = 300.0
    spray_draw_ma: float = 1500.0
    reservoir_capacity_ml: float = 500.0
    spray_dose_ml: float = 10.0
    spray_range_m: float = 0.5
    gps_sigma_m: float = 0.02
    ultrasonic_max_range_m: float = 4.0
    ultrasonic_bearings: tuple[float, ...] = (
        -math.pi / 4,
        0.0,
        math.pi / 4,
    )

    def validate(self) -> None:
        positive = {
            "max_speed": self.max_speed,
            "max_turn_rate": self.max_turn_rate,
            "wheelbase": self.wheelbase,
            "battery_capacity_mah": self.battery_capacity_mah,
            "drive_draw_ma": self.drive_draw_ma,
            "idle_draw_ma": self.idle_draw_ma,
            "spray_draw_ma": self.spray_draw_ma,
            "reservoir_capacity_ml": self.reservoir_capacity_ml,
            "spray_dose_ml": self.spray_dose_ml,
            "spray_range_m": self.spray_range_m,
            "ultrasonic_max_range_m": self.ultrasonic_max_range_m,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValueError(f"rover param {name} must be > 0, got {value}")
        if self.gps_sigma_m < 0:
            raise ValueError("gps_sigma_m must be >= 0")
        if not self.ultrasonic_bearings:
            raise ValueError("ultrasonic_bearings must be non-empty")


@dataclass(frozen=True)
class ControlCommand:
    linear: float = 0.0        # m/s, signed
    angular: float = 0.0       # rad/s, signed
    spray_trigger: bool = False

    def clamped(self, params: RoverParams) -> "ControlCommand":
        lin = max(-params.max_speed, min(params.max_speed, self.linear))
        ang = max(-params.max_turn_rate, min(params.max_turn_rate, self.angular))
        if lin == self.linear and ang == self.angular:
            return self
        return ControlCommand(lin, ang, self.spray_trigger)


@dataclass(frozen=True)
class RoverState:
    pose: tuple[float, float, float] = (0.0, 0.0, 0.0)  # x, y, heading
    linear_velocity: float = 0.0
    angular_velocity: float = 0.0
    battery_mah: float = 3000.0
    reservoir_ml: float = 500.0
    mode: Mode = Mode.AUTO
    clock_s: float = 0.0
    proximity: bool = False    # last tick ended against an obstacle or wall

    @property
    def position(self) -> Point:
        return (self.pose[0], self.pose[1])

    @property
    def heading(self) -> float:
        return self.pose[2]


def initial_state(world: WorldMap, params: RoverParams, heading: float = 0.0) -> RoverState:
    return RoverState(
        pose=(world.home[0], world.home[1], heading),
        battery_mah=params.battery_capacity_mah,
        reservoir_ml=params.reservoir_capacity_ml,
    )


def step(state: RoverState, world: WorldMap, cmd: ControlCommand, dt: float, params: RoverParams) -> RoverState:
    """Advance the plant one tick of ``dt`` seconds under ``cmd``.

    Unicycle integration with the pre-step heading; colliding with an
    obstacle or wall halts translation for the tick but keeps the turn.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if state.mode in (Mode.DONE, Mode.FAULT):
        raise ValueError(f"cannot step a rover in mode {state.mode.name}")
    cmd = cmd.clamped(params)
    moving = abs(cmd.linear) > _EPS or abs(cmd.angular) > _EPS
    draw = params.drive_draw_ma if moving else params.idle_draw_ma
    battery = state.battery_mah - draw * dt / 3600.0

    x, y, heading = state.pose
    nx = x + cmd.linear * math.cos(heading) * dt
    ny = y + cmd.linear * math.sin(heading) * dt
    proximity = False
    linear = cmd.linear
    if not world.contains((nx, ny)) or world.point_in_obstacle((nx, ny)):
        nx, ny = x, y
        linear = 0.0
        proximity = True
    nheading = wrap_angle(heading + cmd.angular * dt)

    mode = state.mode
    if battery <= 0.0:
        battery = 0.0
        mode = Mode.FAULT
    return replace(
        state,
        pose=(nx, ny, nheading),
        linear_velocity=linear,
        angular_velocity=cmd.angular,
        battery_mah=battery,
        mode=mode,
        clock_s=state.clock_s + dt,
        proximity=proximity,
    )


def gps_read(state: RoverState, sigma: float, rng: random.Random) -> Point:
    """True position plus independent zero-mean Gaussian noise per axis."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    x, y, _ = state.pose
    if sigma == 0.0:
        return (x, y)
    return (x + rng.gauss(0.0, sigma), y + rng.gauss(0.0, sigma))


def ultrasonic_scan(state: RoverState, world: WorldMap, params: RoverParams) -> list[tuple[float, float]]:
    """One range sample per configured bearing, bearings relative to heading."""
    x, y, heading = state.pose
    return [
        (b, ray_distance(world, (x, y), heading + b, params.ultrasonic_max_range_m))
        for b in params.ultrasonic_bearings
    ]


@dataclass(frozen=True)
class SprayResult:
    state: RoverState
    treated: tuple[int, ...] = ()
    rejected: bool = False  # reservoir below one dose; nothing dispensed


def spray(state: RoverState, world: WorldMap, params: RoverParams) -> SprayResult:
    """Dispense one larvicide dose, deactivating active sites within range.

    A fixed dose is consumed whether or not any site is in range; an empty
    reservoir rejects the request without side effects.
    """
    if state.reservoir_ml < params.spray_dose_ml:
        return SprayResult(state=state, rejected=True)
    treated: list[int] = []
    for site in world.sites:
        if site.active and dist(state.position, site.center) <= params.spray_range_m:
            site.active = False
            treated.append(site.id)
    burst_mah = params.spray_draw_ma / 3600.0  # one-second nozzle burst
    battery = max(0.0, state.battery_mah - burst_mah)
    new_state = replace(
        state,
        reservoir_ml=state.reservoir_ml - params.spray_dose_ml,
        battery_mah=battery,
        mode=Mode.FAULT if battery <= 0.0 else state.mode,
    )
    return SprayResult(state=new_state, treated=tuple(sorted(treated)))
