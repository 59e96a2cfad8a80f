"""Wire protocol between rover and ground control.

Framed binary messages over a datagram link: fixed header, type-specific
payload, CRC-32 trailer. Hostile input is rejected with a distinct error
code per failure mode; a session layer dedupes and orders commands.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

from .rover import ControlCommand, Mode

MAGIC = b"\x4d\x51"
VERSION = 1
MAX_PAYLOAD = 1024
_HEADER = struct.Struct(">2sBBIH")  # magic, version, msg_type, seq, payload_len
_CRC = struct.Struct(">I")

MSG_HEARTBEAT = 0x01
MSG_TELEMETRY = 0x02
MSG_DETECTION_EVENT = 0x03
MSG_SPRAY_EVENT = 0x04
MSG_NODE_REACHED = 0x05
MSG_COMMAND_MODE = 0x10
MSG_COMMAND_MANUAL = 0x11
MSG_MISSION_UPLOAD = 0x12
MSG_ACK = 0x7F


class FrameError(ValueError):
    code = "FRAME"


class BadMagic(FrameError):
    code = "BAD_MAGIC"


class BadCrc(FrameError):
    code = "BAD_CRC"


class BadLength(FrameError):
    code = "BAD_LENGTH"


class UnknownType(FrameError):
    code = "UNKNOWN_TYPE"


# --- message catalog ------------------------------------------------------


@dataclass(frozen=True)
class Heartbeat:
    mode: int
    clock_s: float
    TYPE = MSG_HEARTBEAT
    _S = struct.Struct(">Bf")

    def pack(self) -> bytes:
        return self._S.pack(self.mode, self.clock_s)

    @classmethod
    def unpack(cls, payload: bytes) -> "Heartbeat":
        mode, clock_s = cls._S.unpack(payload)
        return cls(mode, clock_s)


@dataclass(frozen=True)
class Telemetry:
    x: float
    y: float
    heading: float
    battery_mah: float
    reservoir_ml: float
    fsm_state: int
    gps_x: float
    gps_y: float
    TYPE = MSG_TELEMETRY
    _S = struct.Struct(">fffffBff")

    def pack(self) -> bytes:
        return self._S.pack(
            self.x, self.y, self.heading, self.battery_mah,
            self.reservoir_ml, self.fsm_state, self.gps_x, self.gps_y,
        )

    @classmethod
    def unpack(cls, payload: bytes) -> "Telemetry":
        return cls(*cls._S.unpack(payload))


@dataclass(frozen=True)
class DetectionEvent:
    class_id: int
    confidence: float
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    site_id: int = -1  # -1 when the detection resolved to no known site
    TYPE = MSG_DETECTION_EVENT
    _S = struct.Struct(">Bfffffi")

    def pack(self) -> bytes:
        return self._S.pack(
            self.class_id, self.confidence,
            self.x_min, self.y_min, self.x_max, self.y_max, self.site_id,
        )

    @classmethod
    def unpack(cls, payload: bytes) -> "DetectionEvent":
        return cls(*cls._S.unpack(payload))


@dataclass(frozen=True)
class SprayEvent:
    site_ids: tuple[int, ...]
    reservoir_ml: float
    TYPE = MSG_SPRAY_EVENT

    def pack(self) -> bytes:
        head = struct.pack(">Hf", len(self.site_ids), self.reservoir_ml)
        return head + struct.pack(f">{len(self.site_ids)}i", *self.site_ids)

    @classmethod
    def unpack(cls, payload: bytes) -> "SprayEvent":
        count, reservoir = struct.unpack_from(">Hf", payload, 0)
        ids = struct.unpack_from(f">{count}i", payload, 6)
        if len(payload) != 6 + 4 * count:
            raise BadLength("spray event payload size mismatch")
        return cls(tuple(ids), reservoir)


@dataclass(frozen=True)
class NodeReached:
    node_id: int
    clock_s: float
    TYPE = MSG_NODE_REACHED
    _S = struct.Struct(">if")

    def pack(self) -> bytes:
        return self._S.pack(self.node_id, self.clock_s)

    @classmethod
    def unpack(cls, payload: bytes) -> "NodeReached":
        return cls(*cls._S.unpack(payload))


@dataclass(frozen=True)
class CommandMode:
    target_mode: int
    TYPE = MSG_COMMAND_MODE
    _S = struct.Struct(">B")

    def pack(self) -> bytes:
        return self._S.pack(self.target_mode)

    @classmethod
    def unpack(cls, payload: bytes) -> "CommandMode":
        return cls(*cls._S.unpack(payload))


@dataclass(frozen=True)
class CommandManual:
    linear: float
    angular: float
    spray: bool
    TYPE = MSG_COMMAND_MANUAL
    _S = struct.Struct(">ffB")

    def pack(self) -> bytes:
        return self._S.pack(self.linear, self.angular, 1 if self.spray else 0)

    @classmethod
    def unpack(cls, payload: bytes) -> "CommandManual":
        linear, angular, spray = cls._S.unpack(payload)
        return cls(linear, angular, bool(spray))


@dataclass(frozen=True)
class MissionUpload:
    waypoint_ids: tuple[int, ...]
    TYPE = MSG_MISSION_UPLOAD

    def pack(self) -> bytes:
        return struct.pack(">H", len(self.waypoint_ids)) + struct.pack(
            f">{len(self.waypoint_ids)}i", *self.waypoint_ids
        )

    @classmethod
    def unpack(cls, payload: bytes) -> "MissionUpload":
        (count,) = struct.unpack_from(">H", payload, 0)
        if len(payload) != 2 + 4 * count:
            raise BadLength("mission upload payload size mismatch")
        ids = struct.unpack_from(f">{count}i", payload, 2)
        return cls(tuple(ids))


@dataclass(frozen=True)
class Ack:
    acked_seq: int
    status: int = 0
    TYPE = MSG_ACK
    _S = struct.Struct(">IB")

    def pack(self) -> bytes:
        return self._S.pack(self.acked_seq, self.status)

    @classmethod
    def unpack(cls, payload: bytes) -> "Ack":
        return cls(*cls._S.unpack(payload))


Message = (
    Heartbeat | Telemetry | DetectionEvent | SprayEvent
    | NodeReached | CommandMode | CommandManual | MissionUpload | Ack
)

_CATALOG = {
    cls.TYPE: cls
    for cls in (
        Heartbeat, Telemetry, DetectionEvent, SprayEvent,
        NodeReached, CommandMode, CommandManual, MissionUpload, Ack,
    )
}


# --- frame codec ----------------------------------------------------------


def encode(message: Message, seq: int) -> bytes:
    """Wrap a catalog message in a sequenced, checksummed frame."""
    payload = message.pack()
    if len(payload) > MAX_PAYLOAD:
        raise ValueError(f"payload {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    head = _HEADER.pack(MAGIC, VERSION, message.TYPE, seq & 0xFFFFFFFF, len(payload))
    body = head + payload
    return body + _CRC.pack(zlib.crc32(body))


@dataclass(frozen=True)
class Frame:
    msg_type: int
    seq: int
    message: Message


def decode(data: bytes) -> Frame:
    """Parse one frame; raises a FrameError subclass on anything malformed."""
    if len(data) < _HEADER.size + _CRC.size:
        raise BadLength(f"frame too short: {len(data)} bytes")
    magic, version, msg_type, seq, payload_len = _HEADER.unpack_from(data, 0)
    if magic != MAGIC or version != VERSION:
        raise BadMagic("bad magic or version")
    if payload_len > MAX_PAYLOAD:
        raise BadLength(f"declared payload {payload_len} exceeds {MAX_PAYLOAD}")
    total = _HEADER.size + payload_len + _CRC.size
    if len(data) != total:
        raise BadLength(f"frame is {len(data)} bytes, layout implies {total}")
    body = data[: _HEADER.size + payload_len]
    (crc,) = _CRC.unpack_from(data, _HEADER.size + payload_len)
    if crc != zlib.crc32(body):
        raise BadCrc("checksum mismatch")
    cls = _CATALOG.get(msg_type)
    if cls is None:
        raise UnknownType(f"message type 0x{msg_type:02x}")
    payload = data[_HEADER.size : _HEADER.size + payload_len]
    try:
        message = cls.unpack(payload)
    except (struct.error, BadLength) as exc:
        raise BadLength(f"payload does not fit {cls.__name__}: {exc}") from None
    return Frame(msg_type, seq, message)


class FrameEncoder:
    """Per-sender frame factory with a strictly increasing sequence number."""

    def __init__(self, start_seq: int = 0) -> None:
        self._seq = start_seq

    @property
    def seq(self) -> int:
        return self._seq

    def encode(self, message: Message) -> bytes:
        frame = encode(message, self._seq)
        self._seq += 1
        return frame


# --- command session ------------------------------------------------------


@dataclass
class CommandView:
    """What the autonomy loop sees from the link on one tick."""

    manual: ControlCommand | None = None
    mode_request: Mode | None = None
    mission_waypoints: tuple[int, ...] | None = None


class CommandSession:
    """Loss-tolerant command ingestion.

    Duplicate sequence numbers apply once; manual commands resolve
    last-sequence-wins; manual input goes stale after ``manual_timeout_s``
    of silence so a dropped link means a stopped rover. Mission uploads are
    acknowledged through the outbox.
    """

    def __init__(self, manual_timeout_s: float = 1.0) -> None:
        self.manual_timeout_s = manual_timeout_s
        self.outbox: list[bytes] = []
        self.errors: list[str] = []
        self._seen: set[int] = set()
        self._encoder = FrameEncoder()
        self._manual: CommandManual | None = None
        self._manual_seq = -1
        self._manual_clock = -1e30
        self._mode_request: Mode | None = None
        self._mission: tuple[int, ...] | None = None

    def ingest(self, data: bytes, clock_s: float) -> None:
        try:
            frame = decode(data)
        except FrameError as exc:
            self.errors.append(exc.code)
            return
        if frame.seq in self._seen:
            return
        self._seen.add(frame.seq)
        msg = frame.message
        if isinstance(msg, CommandManual):
            if frame.seq > self._manual_seq:
                self._manual_seq = frame.seq
                self._manual = msg
                self._manual_clock = clock_s
        elif isinstance(msg, CommandMode):
            self._mode_request = Mode(msg.target_mode)
        elif isinstance(msg, MissionUpload):
            self._mission = msg.waypoint_ids
            self.outbox.append(self._encoder.encode(Ack(acked_seq=frame.seq, status=0)))
        # telemetry-direction messages arriving here are legal but ignored

    def view(self, clock_s: float) -> CommandView:
        """Per-tick snapshot; one-shot fields are consumed by the read."""
        manual = None
        if self._manual is not None and clock_s - self._manual_clock <= self.manual_timeout_s:
            manual = ControlCommand(self._manual.linear, self._manual.angular, self._manual.spray)
        out = CommandView(manual=manual, mode_request=self._mode_request, mission_waypoints=self._mission)
        self._mode_request = None
        self._mission = None
        return out

    def drain_outbox(self) -> list[bytes]:
        frames, self.outbox = self.outbox, []
        return frames
