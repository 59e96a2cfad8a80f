"""Ground link: UDP endpoint, JSON mirror and the bridge between them."""

import json
import socket
import time

import pytest
from conftest import GOLDENS

from vectorrover.rover import Mode
from vectorrover.scenario import load_scenario
from vectorrover.service import (
    GroundLink,
    ServiceError,
    _ClientRegistry,
    build_mirror_app,
    message_to_mirror,
    mirror_to_message,
    world_hello,
)
from vectorrover.telemetry import (
    Ack,
    CommandManual,
    CommandMode,
    Heartbeat,
    MissionUpload,
    SprayEvent,
    decode,
    encode,
)

OBSTACLE_ARENA = """
bounds 0 0 12 12
home 1 1
obstacle circle 6 6 1.5
obstacle poly 9 2 11 2 10 4
node 1 10 10 0.5
waypoint 1
site 1 3 9 0.4 50
"""


@pytest.fixture
def link():
    lk = GroundLink(udp_port=0)
    lk.start()
    yield lk
    lk.stop()


def poll_view(lk, predicate, clock_start=0.0, timeout_s=2.0):
    """Spin view() until the receive thread has delivered what we wait for."""
    deadline = time.monotonic() + timeout_s
    clock = clock_start
    while time.monotonic() < deadline:
        view = lk.view(clock)
        if predicate(view):
            return view
        clock += 0.01
        time.sleep(0.01)
    raise AssertionError("timed out waiting for the link")


# --- mirror document mapping --------------------------------------------------


def test_mirror_doc_carries_name_seq_and_fields():
    doc = message_to_mirror(Heartbeat(mode=2, clock_s=1.5), 7)
    assert doc == {"type": "HEARTBEAT", "seq": 7, "data": {"mode": 2, "clock_s": 1.5}}


def test_mirror_doc_turns_tuples_into_lists():
    doc = message_to_mirror(SprayEvent(site_ids=(3, 5), reservoir_ml=470.0), 9)
    assert doc["data"]["site_ids"] == [3, 5]
    assert json.dumps(doc)  # must be JSON-serializable as-is


@pytest.mark.parametrize(
    "msg",
    [
        CommandMode(target_mode=int(Mode.MANUAL)),
        CommandManual(linear=0.5, angular=-0.25, spray=1),
        MissionUpload(waypoint_ids=(4, 2, 7)),
    ],
)
def test_command_round_trip_through_mirror_json(msg):
    doc = json.loads(json.dumps(message_to_mirror(msg, 11)))
    assert mirror_to_message(doc) == msg


@pytest.mark.parametrize(
    "doc, fragment",
    [
        ([1, 2], "must be an object"),
        ({"type": "NOT_A_THING", "data": {}}, "unknown mirror message type"),
        ({"type": "COMMAND_MODE"}, "missing its data object"),
        ({"type": "COMMAND_MODE", "data": {"target_mode": 1, "extra": 0}}, "expects fields"),
        ({"type": "COMMAND_MANUAL", "data": {"linear": 0.1}}, "expects fields"),
    ],
)
def test_mirror_command_rejections(doc, fragment):
    with pytest.raises(ValueError, match=fragment):
        mirror_to_message(doc)


def test_golden_mirror_documents():
    entries = json.loads((GOLDENS / "catalog_goldens.json").read_text())
    commands = 0
    for entry in entries:
        frame = decode(bytes.fromhex(entry["hex"]))
        assert message_to_mirror(frame.message, frame.seq) == entry["mirror"]
        # command documents must bridge back to the exact golden bytes;
        # UI conformance rests on this direction
        if entry["mirror"]["type"] in ("COMMAND_MODE", "COMMAND_MANUAL", "MISSION_UPLOAD"):
            bridged = mirror_to_message(entry["mirror"])
            assert encode(bridged, entry["seq"]).hex() == entry["hex"]
            commands += 1
    assert commands == 3


# --- world hello ---------------------------------------------------------------


def test_world_hello_matches_golden(tcrr_scenario):
    golden = json.loads((GOLDENS / "world_hello_tcrr.json").read_text())
    assert world_hello(tcrr_scenario) == golden


def test_world_hello_describes_both_obstacle_kinds():
    doc = world_hello(load_scenario(OBSTACLE_ARENA))
    data = doc["data"]
    assert data["bounds"] == [0.0, 0.0, 12.0, 12.0]
    kinds = {obs["kind"] for obs in data["obstacles"]}
    assert kinds == {"circle", "poly"}
    circle = next(o for o in data["obstacles"] if o["kind"] == "circle")
    assert circle == {"kind": "circle", "center": [6.0, 6.0], "radius": 1.5}
    poly = next(o for o in data["obstacles"] if o["kind"] == "poly")
    assert len(poly["vertices"]) == 3
    assert data["waypoints"] == [1]
    assert data["limits"]["max_speed"] > 0


# --- UDP endpoint ----------------------------------------------------------------


def test_udp_round_trip(link):
    client = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    client.settimeout(2.0)
    try:
        client.sendto(encode(CommandMode(target_mode=int(Mode.MANUAL)), 1), ("127.0.0.1", link.udp_port))
        view = poll_view(link, lambda v: v.mode_request is not None)
        assert view.mode_request == Mode.MANUAL

        # the sender is now a registered peer, so publishes come back to it
        link.publish(Heartbeat(mode=int(Mode.MANUAL), clock_s=3.5))
        data, _ = client.recvfrom(2048)
        frame = decode(data)
        assert frame.message == Heartbeat(mode=int(Mode.MANUAL), clock_s=3.5)
        assert frame.seq == 0
    finally:
        client.close()


def test_udp_mission_upload_is_acked(link):
    client = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    client.settimeout(2.0)
    try:
        client.sendto(encode(MissionUpload(waypoint_ids=(1, 2)), 33), ("127.0.0.1", link.udp_port))
        view = poll_view(link, lambda v: v.mission_waypoints is not None)
        assert view.mission_waypoints == (1, 2)
        data, _ = client.recvfrom(2048)
        assert decode(data).message == Ack(acked_seq=33, status=0)
    finally:
        client.close()


def test_udp_port_in_use():
    holder = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    holder.bind(("0.0.0.0", 0))
    port = holder.getsockname()[1]
    try:
        with pytest.raises(ServiceError, match=f"cannot bind udp port {port}"):
            GroundLink(udp_port=port)
    finally:
        holder.close()


def test_corrupt_datagram_is_recorded_not_fatal(link):
    client = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    try:
        client.sendto(b"\x00\x01\x02", ("127.0.0.1", link.udp_port))
        poll_view(link, lambda v: bool(link.session.errors))
        assert link.session.errors == ["BAD_LENGTH"]
    finally:
        client.close()


# --- mirror command bridge -------------------------------------------------------


def test_mirror_command_bridges_to_session(link):
    text = json.dumps({"type": "COMMAND_MODE", "data": {"target_mode": int(Mode.RTL)}})
    assert link.submit_mirror_command(text) is None
    view = poll_view(link, lambda v: v.mode_request is not None)
    assert view.mode_request == Mode.RTL


def test_mirror_manual_commands_use_growing_client_seqs(link):
    first = json.dumps({"type": "COMMAND_MANUAL", "data": {"linear": 0.2, "angular": 0.0, "spray": 0}})
    second = json.dumps({"type": "COMMAND_MANUAL", "data": {"linear": 0.9, "angular": 0.0, "spray": 0}})
    assert link.submit_mirror_command(first) is None
    assert link.submit_mirror_command(second) is None
    view = poll_view(link, lambda v: v.manual is not None)
    assert view.manual.linear == pytest.approx(0.9)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("{broken", "Expecting"),
        (json.dumps({"type": "HEARTBEAT", "data": {"mode": 1, "clock_s": 0.0}}), "not a command"),
        (json.dumps({"type": "COMMAND_MODE", "data": {}}), "expects fields"),
    ],
)
def test_mirror_command_errors_come_back_as_strings(link, text, fragment):
    error = link.submit_mirror_command(text)
    assert error is not None
    assert fragment in error


# --- mirror websocket ---------------------------------------------------------------


def test_mirror_websocket_hello_commands_and_errors(tcrr_scenario):
    from fastapi.testclient import TestClient

    lk = GroundLink(udp_port=0, scenario=tcrr_scenario)
    registry = _ClientRegistry()
    app = build_mirror_app(lk, registry)
    try:
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                hello = json.loads(ws.receive_text())
                assert hello == world_hello(tcrr_scenario)
                assert len(registry.snapshot()) == 1

                ws.send_text(json.dumps({"type": "COMMAND_MODE", "data": {"target_mode": int(Mode.MANUAL)}}))
                deadline = time.monotonic() + 2.0
                view = lk.view(0.0)
                while view.mode_request is None and time.monotonic() < deadline:
                    time.sleep(0.01)
                    view = lk.view(0.0)
                assert view.mode_request == Mode.MANUAL

                ws.send_text("{broken")
                reply = json.loads(ws.receive_text())
                assert reply["type"] == "ERROR"
                assert "Expecting" in reply["data"]["message"]
        assert registry.snapshot() == []
    finally:
        lk.stop()


def test_mirror_websocket_without_scenario_sends_no_hello():
    from fastapi.testclient import TestClient

    lk = GroundLink(udp_port=0)
    app = build_mirror_app(lk)
    try:
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                ws.send_text(json.dumps({"type": "MISSION_UPLOAD", "data": {"waypoint_ids": [1]}}))
                deadline = time.monotonic() + 2.0
                view = lk.view(0.0)
                while view.mission_waypoints is None and time.monotonic() < deadline:
                    time.sleep(0.01)
                    view = lk.view(0.0)
                assert view.mission_waypoints == (1,)
    finally:
        lk.stop()
