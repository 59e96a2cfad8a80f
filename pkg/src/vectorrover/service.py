"""Ground-link service: UDP endpoint plus a structured mirror channel.

The binary frame codec is the canonical wire format. A WebSocket mirror
re-publishes every outbound message as JSON and accepts JSON commands,
bridging them through the same binary codec and command session as UDP
traffic, so there is exactly one command path.

Mirror schema (JSON text messages):
    server -> client: {"type": "WORLD", "seq": 0, "data": {...arena...}}
                      {"type": "<CATALOG NAME>", "seq": n, "data": {...fields...}}
    client -> server: {"type": "COMMAND_MODE",   "data": {"target_mode": int}}
                      {"type": "COMMAND_MANUAL", "data": {"linear": f, "angular": f, "spray": bool}}
                      {"type": "MISSION_UPLOAD", "data": {"waypoint_ids": [int, ...]}}

Field names match the catalog dataclasses one to one.
"""

# no `from __future__ import annotations` here: the websocket endpoint's
# parameter annotation must survive as a real class for fastapi to see it

import dataclasses
import json
import socket
import threading
from queue import Empty, SimpleQueue

from .environment import CircleObstacle, WorldMap
from .rover import RoverParams
from .scenario import Scenario
from .telemetry import (
    Ack,
    CommandManual,
    CommandMode,
    CommandSession,
    CommandView,
    DetectionEvent,
    Heartbeat,
    Message,
    MissionUpload,
    NodeReached,
    SprayEvent,
    Telemetry,
    decode,
    encode,
)

_TYPE_NAMES = {
    Heartbeat: "HEARTBEAT",
    Telemetry: "TELEMETRY",
    DetectionEvent: "DETECTION_EVENT",
    SprayEvent: "SPRAY_EVENT",
    NodeReached: "NODE_REACHED",
    CommandMode: "COMMAND_MODE",
    CommandManual: "COMMAND_MANUAL",
    MissionUpload: "MISSION_UPLOAD",
    Ack: "ACK",
}
_NAME_TYPES = {name: cls for cls, name in _TYPE_NAMES.items()}


def message_to_mirror(msg: Message, seq: int) -> dict:
    """Catalog message -> mirror JSON document."""
    data = dataclasses.asdict(msg)
    for key, value in data.items():
        if isinstance(value, tuple):
            data[key] = list(value)
    return {"type": _TYPE_NAMES[type(msg)], "seq": seq, "data": data}


def mirror_to_message(doc: dict) -> Message:
    """Mirror JSON command -> catalog message; raises ValueError when malformed."""
    if not isinstance(doc, dict):
        raise ValueError("mirror command must be an object")
    name = doc.get("type")
    cls = _NAME_TYPES.get(name)
    if cls is None:
        raise ValueError(f"unknown mirror message type {name!r}")
    data = doc.get("data")
    if not isinstance(data, dict):
        raise ValueError("mirror command is missing its data object")
    fields = {f.name for f in dataclasses.fields(cls)}
    if set(data) != fields:
        raise ValueError(f"{name} expects fields {sorted(fields)}, got {sorted(data)}")
    if "waypoint_ids" in data:
        data = dict(data, waypoint_ids=tuple(data["waypoint_ids"]))
    if "site_ids" in data:
        data = dict(data, site_ids=tuple(data["site_ids"]))
    return cls(**data)


def world_hello(scenario: Scenario) -> dict:
    """Arena snapshot sent to each mirror client on connect."""
    w: WorldMap = scenario.world
    params: RoverParams = scenario.rover
    obstacles = []
    for obs in w.obstacles:
        if isinstance(obs, CircleObstacle):
            obstacles.append({"kind": "circle", "center": list(obs.center), "radius": obs.radius})
        else:
            obstacles.append({"kind": "poly", "vertices": [list(v) for v in obs.vertices]})
    return {
        "type": "WORLD",
        "seq": 0,
        "data": {
            "bounds": list(w.bounds),
            "home": list(w.home),
            "obstacles": obstacles,
            "sites": [
                {"id": s.id, "center": list(s.center), "radius": s.radius, "pre_population": s.pre_population}
                for s in w.sites
            ],
            "nodes": [
                {"id": n.id, "center": list(n.center), "acceptance_radius": n.acceptance_radius}
                for n in w.nodes
            ],
            "waypoints": list(scenario.mission.waypoints),
            "limits": {"max_speed": params.max_speed, "max_turn_rate": params.max_turn_rate},
        },
    }


class ServiceError(RuntimeError):
    pass


class GroundLink:
    """Shared surface between the simulation loop and the outside world.

    The loop owns all protocol state: inbound datagrams are queued by the
    receive threads and only parsed on `view()`, inside the loop thread.
    Outbound messages fan out to every UDP peer that has sent us a frame
    and to every mirror client.
    """

    def __init__(
        self,
        udp_port: int = 14550,
        mirror_port: int = 8080,
        enable_mirror: bool = False,
        manual_timeout_s: float = 1.0,
        scenario: Scenario | None = None,
    ) -> None:
        self.session = CommandSession(manual_timeout_s)
        self._inbound: SimpleQueue = SimpleQueue()
        self._peers: set[tuple[str, int]] = set()
        self._peer_lock = threading.Lock()
        self._tx_seq = 0
        self._client_seq = 1_000_000  # mirror-originated frames, distinct range
        self._stop = threading.Event()
        self._scenario = scenario
        self._mirror = None
        try:
            self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            self._sock.bind(("0.0.0.0", udp_port))
        except OSError as exc:
            raise ServiceError(f"cannot bind udp port {udp_port}: {exc}") from None
        self.udp_port = self._sock.getsockname()[1]
        self._sock.settimeout(0.2)
        self._rx_thread = threading.Thread(target=self._rx_loop, name="udp-rx", daemon=True)
        if enable_mirror:
            self._mirror = _MirrorServer(self, mirror_port)
        self.mirror_port = mirror_port

    # -- lifecycle

    def start(self) -> None:
        self._rx_thread.start()
        if self._mirror is not None:
            self._mirror.start()

    def stop(self) -> None:
        self._stop.set()
        if self._mirror is not None:
            self._mirror.stop()
        self._sock.close()
        if self._rx_thread.is_alive():
            self._rx_thread.join(timeout=2.0)

    def _rx_loop(self) -> None:
        while not self._stop.is_set():
            try:
                data, addr = self._sock.recvfrom(2048)
            except socket.timeout:
                continue
            except OSError:
                return
            with self._peer_lock:
                self._peers.add(addr)
            self._inbound.put(data)

    # -- mirror entry point (called from the mirror thread)

    def submit_mirror_command(self, text: str) -> str | None:
        """Bridge one JSON command onto the binary path; returns an error string or None."""
        try:
            msg = mirror_to_message(json.loads(text))
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            return str(exc)
        if not isinstance(msg, (CommandMode, CommandManual, MissionUpload)):
            return f"{type(msg).__name__} is not a command"
        frame = encode(msg, self._client_seq)
        self._client_seq += 1
        self._inbound.put(frame)
        return None

    # -- simulation-loop surface

    def view(self, clock_s: float) -> CommandView:
        """Drain queued datagrams into the session, then snapshot commands."""
        while True:
            try:
                data = self._inbound.get_nowait()
            except Empty:
                break
            self.session.ingest(data, clock_s)
        for frame in self.session.drain_outbox():
            self._send_raw(frame)
            decoded = decode(frame)
            self._broadcast_mirror(message_to_mirror(decoded.message, decoded.seq))
        return self.session.view(clock_s)

    def publish(self, msg: Message) -> None:
        frame = encode(msg, self._tx_seq)
        doc = message_to_mirror(msg, self._tx_seq)
        self._tx_seq += 1
        self._send_raw(frame)
        self._broadcast_mirror(doc)

    def _send_raw(self, frame: bytes) -> None:
        with self._peer_lock:
            peers = list(self._peers)
        for addr in peers:
            try:
                self._sock.sendto(frame, addr)
            except OSError:
                pass

    def _broadcast_mirror(self, doc: dict) -> None:
        if self._mirror is not None:
            self._mirror.broadcast(json.dumps(doc, sort_keys=True))

    def hello_doc(self) -> str | None:
        if self._scenario is None:
            return None
        return json.dumps(world_hello(self._scenario), sort_keys=True)


def build_mirror_app(link: GroundLink, registry: "_ClientRegistry | None" = None):
    """FastAPI app serving the JSON mirror at /ws.

    Split out from the server wrapper so it can be driven by an ASGI test
    client as well as by uvicorn.
    """
    try:
        from fastapi import FastAPI, WebSocket, WebSocketDisconnect
    except ImportError as exc:
        raise ServiceError(
            "mirror channel needs the serve extra (fastapi + uvicorn)"
        ) from exc

    if registry is None:
        registry = _ClientRegistry()
    app = FastAPI()

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        hello = link.hello_doc()
        if hello is not None:
            await ws.send_text(hello)
        registry.add(ws)
        try:
            while True:
                text = await ws.receive_text()
                error = link.submit_mirror_command(text)
                if error is not None:
                    await ws.send_text(json.dumps({"type": "ERROR", "data": {"message": error}}))
        except WebSocketDisconnect:
            pass
        finally:
            registry.discard(ws)

    return app


class _ClientRegistry:
    """Thread-safe set of connected mirror sockets."""

    def __init__(self) -> None:
        self._clients: set = set()
        self._lock = threading.Lock()

    def add(self, ws) -> None:
        with self._lock:
            self._clients.add(ws)

    def discard(self, ws) -> None:
        with self._lock:
            self._clients.discard(ws)

    def snapshot(self) -> list:
        with self._lock:
            return list(self._clients)


class _MirrorServer:
    """WebSocket mirror on a background uvicorn server."""

    def __init__(self, link: GroundLink, port: int) -> None:
        try:
            import uvicorn
        except ImportError as exc:
            raise ServiceError(
                "mirror channel needs the serve extra (fastapi + uvicorn)"
            ) from exc

        self._link = link
        self._registry = _ClientRegistry()
        self._loop = None
        app = build_mirror_app(link, self._registry)

        config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(target=self._run, name="mirror", daemon=True)

    def _run(self) -> None:
        import asyncio

        self._loop = asyncio.new_event_loop()
        asyncio.set_event_loop(self._loop)
        self._loop.run_until_complete(self._server.serve())

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._server.should_exit = True
        if self._thread.is_alive():
            self._thread.join(timeout=3.0)

    def broadcast(self, text: str) -> None:
        loop = self._loop
        if loop is None or loop.is_closed():
            return
        clients = self._registry.snapshot()

        async def _send() -> None:
            for ws in clients:
                try:
                    await ws.send_text(text)
                except Exception:
                    self._registry.discard(ws)

        import asyncio

        asyncio.run_coroutine_threadsafe(_send(), loop)
