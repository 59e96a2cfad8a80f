"""Deterministic simulation loop and trace persistence.

One fixed-step loop wires sensing, detection, autonomy, arbitration and the
plant model; every run is fully determined by (scenario, seed, injected
commands). Runs record a binary trace that replays to the same report.
"""

from __future__ import annotations

import dataclasses
import json
import random
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

from .autonomy import FsmState, MissionController, MissionStatus, arbitrate
from .detection import synthesize_frame
from .environment import WorldMap, sites_in_fov
from .events import Event, TickRecord
from .metrics import MissionReport, mission_report
from .rover import ControlCommand, Mode, gps_read, initial_state, spray, step, ultrasonic_scan
from .scenario import Scenario, load_scenario
from .telemetry import (
    CommandView,
    DetectionEvent,
    Heartbeat,
    Message,
    NodeReached,
    SprayEvent,
    Telemetry,
)

TRACE_MAGIC = b"RTRC"
TRACE_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    scenario_path: str
    seed: int | None = None
    dt_s: float = 0.1
    max_sim_time_s: float = 600.0
    realtime_factor: float = 0.0
    udp_port: int = 14550
    mirror_port: int = 8080

    def validate(self) -> None:
        if self.dt_s <= 0:
            raise ValueError("dt_s must be positive")
        if self.max_sim_time_s <= 0:
            raise ValueError("max_sim_time_s must be positive")
        if self.realtime_factor < 0:
            raise ValueError("realtime_factor cannot be negative")


def _canonical(doc: dict) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


@dataclass
class TraceLog:
    """Ordered tick records plus the knobs that produced them."""

    dt_s: float
    seed: int
    records: list[TickRecord] = field(default_factory=list)

    def to_bytes(self) -> bytes:
        chunks = [TRACE_MAGIC, bytes([TRACE_VERSION])]
        meta = _canonical({"dt_s": self.dt_s, "seed": self.seed})
        chunks.append(struct.pack(">I", len(meta)))
        chunks.append(meta)
        for rec in self.records:
            blob = _canonical(rec.to_dict())
            chunks.append(struct.pack(">I", len(blob)))
            chunks.append(blob)
        return b"".join(chunks)

    @classmethod
    def from_bytes(cls, data: bytes) -> "TraceLog":
        if len(data) < 5 or data[:4] != TRACE_MAGIC:
            raise ValueError("not a trace file: bad magic")
        if data[4] != TRACE_VERSION:
            raise ValueError(f"unsupported trace version {data[4]}")
        offset = 5
        blobs: list[dict] = []
        index = 0
        while offset < len(data):
            if offset + 4 > len(data):
                raise ValueError(f"record {index}: truncated length prefix")
            (length,) = struct.unpack_from(">I", data, offset)
            offset += 4
            if offset + length > len(data):
                raise ValueError(f"record {index}: truncated body")
            try:
                blobs.append(json.loads(data[offset : offset + length]))
            except json.JSONDecodeError as exc:
                raise ValueError(f"record {index}: bad JSON: {exc}") from None
            offset += length
            index += 1
        if not blobs:
            raise ValueError("record 0: missing metadata record")
        meta = blobs[0]
        try:
            trace = cls(dt_s=float(meta["dt_s"]), seed=int(meta["seed"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"record 0: malformed metadata: {exc}") from None
        for i, doc in enumerate(blobs[1:], start=1):
            try:
                trace.records.append(TickRecord.from_dict(doc))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"record {i}: malformed: {exc}") from None
        for i, rec in enumerate(trace.records):
            expect = (i + 1) * trace.dt_s
            if abs(rec.clock_s - expect) > 1e-6:
                raise ValueError(f"record {i}: clock {rec.clock_s} breaks the dt ladder")
        return trace

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "TraceLog":
        return cls.from_bytes(Path(path).read_bytes())


_FSM_TO_MODE = {
    FsmState.IDLE: Mode.AUTO,
    FsmState.NAVIGATE: Mode.AUTO,
    FsmState.INSPECT: Mode.AUTO,
    FsmState.TREAT: Mode.AUTO,
    FsmState.RTL: Mode.RTL,
    FsmState.DONE: Mode.DONE,
    FsmState.FAULT: Mode.FAULT,
}


def _fresh_world(scn: Scenario) -> WorldMap:
    # sites carry the only mutable flag; copy them so a Scenario can run twice
    return dataclasses.replace(
        scn.world, sites=[dataclasses.replace(site) for site in scn.world.sites]
    )


def run(
    config: RunConfig,
    scenario: Scenario | None = None,
    session=None,
    publish=None,
) -> tuple[MissionReport, TraceLog]:
    """Simulate one mission to DONE, FAULT or the time limit.

    ``session`` (a telemetry.CommandSession) injects external commands;
    ``publish`` receives catalog messages at the telemetry cadence.
    """
    config.validate()
    if scenario is None:
        scenario = load_scenario(Path(config.scenario_path).read_text())
    seed = config.seed if config.seed is not None else (scenario.seed or 0)
    dt = config.dt_s
    world = _fresh_world(scenario)
    params = scenario.rover
    profile = scenario.detector
    mission = scenario.mission

    rng_gps = random.Random(f"{seed}/gps")
    rng_detector = random.Random(f"{seed}/detector")

    state = dataclasses.replace(initial_state(world, params), mode=Mode.AUTO)
    controller = MissionController(world, mission, params, profile)
    status = controller.status
    records: list[TickRecord] = []
    heartbeat_ticks = max(1, round(1.0 / dt))
    pending: list[Event] = [Event(0.0, "MODE_CHANGE", {"mode": int(Mode.AUTO)})]
    tick = 0

    while state.clock_s < config.max_sim_time_s - 1e-9:
        wall_start = time.monotonic() if config.realtime_factor > 0 else 0.0
        view = session.view(state.clock_s) if session is not None else CommandView()
        events: list[Event] = pending
        pending = []

        if view.mode_request is not None and view.mode_request != state.mode:
            if view.mode_request in (Mode.AUTO, Mode.MANUAL, Mode.IDLE, Mode.RTL):
                state = dataclasses.replace(state, mode=view.mode_request)
                events.append(Event(state.clock_s, "MODE_CHANGE", {"mode": int(state.mode)}))
                if view.mode_request == Mode.RTL and status.fsm_state not in (
                    FsmState.DONE,
                    FsmState.FAULT,
                ):
                    status.fsm_state = FsmState.RTL
        if view.mission_waypoints is not None:
            mission.waypoints = list(view.mission_waypoints)
            mission.validate(world)
            status.current_waypoint_index = 0
            if status.fsm_state == FsmState.NAVIGATE:
                status.fsm_state = FsmState.IDLE

        sensors = ultrasonic_scan(state, world, params)
        visible = sites_in_fov(world, state.pose, profile.fov, profile.camera_range_m)
        _, detections = synthesize_frame(visible, profile, rng_detector)

        reached_before = len(status.nodes_reached)
        skipped_before = len(status.nodes_skipped)
        done_before = status.fsm_state == FsmState.DONE

        if state.mode == Mode.MANUAL:
            auto_cmd = ControlCommand()
        else:
            auto_cmd = controller.tick(state, sensors, detections)

        for node_id in status.nodes_reached[reached_before:]:
            events.append(Event(state.clock_s, "NODE_REACHED", {"node_id": node_id}))
        for node_id in status.nodes_skipped[skipped_before:]:
            events.append(Event(state.clock_s, "NODE_SKIPPED", {"node_id": node_id}))
        if status.fsm_state == FsmState.DONE and not done_before:
            events.append(Event(state.clock_s, "MISSION_DONE", {"clock_s": status.end_clock_s}))

        cmd = arbitrate(auto_cmd, view.manual, state.mode)
        prev_proximity = state.proximity
        new_state = step(state, world, cmd, dt, params)

        if new_state.proximity and not prev_proximity:
            events.append(Event(new_state.clock_s, "PROXIMITY", {}))
        if new_state.mode == Mode.FAULT:
            events.append(Event(new_state.clock_s, "FAULT", {"reason": "battery exhausted"}))
            status.fsm_state = FsmState.FAULT

        if cmd.spray_trigger and new_state.mode != Mode.FAULT:
            result = spray(new_state, world, params)
            new_state = result.state
            if result.rejected:
                events.append(
                    Event(new_state.clock_s, "SPRAY_REJECTED", {"reservoir_ml": new_state.reservoir_ml})
                )
            else:
                status.sites_treated.extend(result.treated)
                events.append(
                    Event(
                        new_state.clock_s,
                        "SPRAY",
                        {"site_ids": list(result.treated), "reservoir_ml": new_state.reservoir_ml},
                    )
                )

        if new_state.mode not in (Mode.MANUAL, Mode.FAULT):
            target_mode = _FSM_TO_MODE[status.fsm_state]
            if target_mode != new_state.mode:
                new_state = dataclasses.replace(new_state, mode=target_mode)
                events.append(Event(new_state.clock_s, "MODE_CHANGE", {"mode": int(target_mode)}))

        if detections:
            events.append(Event(new_state.clock_s, "DETECTION", {"count": len(detections)}))

        record = TickRecord(
            clock_s=new_state.clock_s,
            x=new_state.pose[0],
            y=new_state.pose[1],
            heading=new_state.pose[2],
            battery_mah=new_state.battery_mah,
            reservoir_ml=new_state.reservoir_ml,
            mode=int(new_state.mode),
            fsm_state=int(status.fsm_state),
            cmd_linear=cmd.linear,
            cmd_angular=cmd.angular,
            cmd_spray=cmd.spray_trigger,
            events=tuple(events),
        )
        records.append(record)

        if publish is not None:
            _publish_tick(publish, new_state, status, detections, events, tick, heartbeat_ticks, profile, params, rng_gps)

        state = new_state
        tick += 1
        if status.fsm_state in (FsmState.DONE, FsmState.FAULT):
            break
        if config.realtime_factor > 0:
            budget = dt / config.realtime_factor
            elapsed = time.monotonic() - wall_start
            if budget > elapsed:
                time.sleep(budget - elapsed)

    if state.mode == Mode.FAULT:
        status.fsm_state = FsmState.FAULT
    report = mission_report(status, world, records)
    trace = TraceLog(dt_s=dt, seed=seed, records=records)
    return report, trace


def _publish_tick(
    publish,
    state,
    status: MissionStatus,
    detections,
    events: list[Event],
    tick: int,
    heartbeat_ticks: int,
    profile,
    params,
    rng_gps: random.Random,
) -> None:
    """Telemetry cadence: state every 5 ticks, heartbeat every second, events now."""
    messages: list[Message] = []
    if tick % heartbeat_ticks == 0:
        messages.append(Heartbeat(mode=int(state.mode), clock_s=state.clock_s))
    if tick % 5 == 0:
        gx, gy = gps_read(state, params.gps_sigma_m, rng_gps)
        messages.append(
            Telemetry(
                x=state.pose[0],
                y=state.pose[1],
                heading=state.pose[2],
                battery_mah=state.battery_mah,
                reservoir_ml=state.reservoir_ml,
                fsm_state=int(status.fsm_state),
                gps_x=gx,
                gps_y=gy,
            )
        )
    for det in detections:
        messages.append(
            DetectionEvent(
                class_id=det.class_id,
                confidence=det.confidence,
                x_min=det.box.x_min,
                y_min=det.box.y_min,
                x_max=det.box.x_max,
                y_max=det.box.y_max,
            )
        )
    for ev in events:
        if ev.kind == "NODE_REACHED":
            messages.append(NodeReached(node_id=ev.data["node_id"], clock_s=ev.clock_s))
        elif ev.kind == "SPRAY":
            messages.append(
                SprayEvent(site_ids=tuple(ev.data["site_ids"]), reservoir_ml=ev.data["reservoir_ml"])
            )
        elif ev.kind == "SPRAY_REJECTED":
            messages.append(SprayEvent(site_ids=(), reservoir_ml=ev.data["reservoir_ml"]))
    for msg in messages:
        publish(msg)


def replay(trace: TraceLog, scenario: Scenario) -> MissionReport:
    """Recompute the mission report from a recorded trace, no re-simulation."""
    status = MissionStatus()
    status.start_clock_s = 0.0
    for rec in trace.records:
        for ev in rec.events:
            if ev.kind == "NODE_REACHED":
                status.nodes_reached.append(ev.data["node_id"])
            elif ev.kind == "NODE_SKIPPED":
                status.nodes_skipped.append(ev.data["node_id"])
            elif ev.kind == "SPRAY":
                status.sites_treated.extend(ev.data["site_ids"])
            elif ev.kind == "MISSION_DONE":
                status.fsm_state = FsmState.DONE
                status.end_clock_s = ev.data["clock_s"]
            elif ev.kind == "FAULT":
                status.fsm_state = FsmState.FAULT
    if status.fsm_state not in (FsmState.DONE, FsmState.FAULT) and trace.records:
        status.fsm_state = FsmState(trace.records[-1].fsm_state)
    return mission_report(status, scenario.world, trace.records)
