"""Event and tick-record types shared by the simulation loop and reporting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

# Event kinds emitted by the simulation loop.
NODE_REACHED = "NODE_REACHED"
NODE_SKIPPED = "NODE_SKIPPED"
SPRAY = "SPRAY"
SPRAY_REJECTED = "SPRAY_REJECTED"
DETECTION = "DETECTION"
MODE_CHANGE = "MODE_CHANGE"
PROXIMITY = "PROXIMITY"
MISSION_DONE = "MISSION_DONE"
FAULT = "FAULT"


@dataclass(frozen=True)
class Event:
    clock_s: float
    kind: str
    data: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"clock_s": self.clock_s, "kind": self.kind, "data": self.data}

    @staticmethod
    def from_dict(d: dict[str, Any]) -> "Event":
        return Event(clock_s=float(d["clock_s"]), kind=str(d["kind"]), data=dict(d.get("data", {})))


@dataclass(frozen=True)
class TickRecord:
    """One simulation tick: state snapshot, applied command and tick events."""

    clock_s: float
    x: float
    y: float
    heading: float
    battery_mah: float
    reservoir_ml: float
    mode: int
    fsm_state: int
    cmd_linear: float
    cmd_angular: float
    cmd_spray: bool
    events: tuple[Event, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "clock_s": self.clock_s,
            "x": self.x,
            "y": self.y,
            "heading": self.heading,
            "battery_mah": self.battery_mah,
            "reservoir_ml": self.reservoir_ml,
            "mode": self.mode,
            "fsm_state": self.fsm_state,
            "cmd_linear": self.cmd_linear,
            "cmd_angular": self.cmd_angular,
            "cmd_spray": self.cmd_spray,
            "events": [e.to_dict() for e in self.events],
        }

    @staticmethod
    def from_dict(d: dict[str, Any]) -> "TickRecord":
        return TickRecord(
            clock_s=float(d["clock_s"]),
            x=float(d["x"]),
            y=float(d["y"]),
            heading=float(d["heading"]),
            battery_mah=float(d["battery_mah"]),
            reservoir_ml=float(d["reservoir_ml"]),
            mode=int(d["mode"]),
            fsm_state=int(d["fsm_state"]),
            cmd_linear=float(d["cmd_linear"]),
            cmd_angular=float(d["cmd_angular"]),
            cmd_spray=bool(d["cmd_spray"]),
            events=tuple(Event.from_dict(e) for e in d.get("events", [])),
        )
