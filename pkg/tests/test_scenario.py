"""Scenario text format: parsing, validation errors, serialization fixed point."""

import pytest

from vectorrover.scenario import ScenarioError, load_scenario, serialize_scenario

from conftest import SCENARIOS

MINIMAL = """
bounds 0 0 20 20
home 1 1
"""

FULL = """
# full-feature scenario
bounds 0 0 30 25
home 2 2
obstacle circle 10 10 1.5
obstacle poly 20 5 24 5 24 9 20 9
site 1 7.5 2.4 0.4 100
site 2 13 2.4 0.35 250
node 1 5 2 0.6
node 2 10 2 0.6
waypoint 1
waypoint 2
rover max_speed=0.8 spray_range_m=0.6
detector tp_rate=0.9,0.8 fp_per_frame=0.1 jitter_px=1.5
mission treat_on_detect=true detect_confidence_threshold=0.6 stuck_timeout_s=9
seed 7
bom 6 7.27 Motor
bom 1 19.66 GPS Module
bom_total 63.28
"""


def test_minimal_scenario_parses_to_empty_world():
    scn = load_scenario(MINIMAL)
    assert scn.world.bounds == (0.0, 0.0, 20.0, 20.0)
    assert scn.world.home == (1.0, 1.0)
    assert scn.world.obstacles == [] and scn.world.sites == [] and scn.world.nodes == []
    assert scn.mission.waypoints == []
    assert scn.seed is None and scn.bom is None


def test_full_scenario_parses_every_directive():
    scn = load_scenario(FULL)
    assert len(scn.world.obstacles) == 2
    assert [s.id for s in scn.world.sites] == [1, 2]
    assert scn.mission.waypoints == [1, 2]
    assert scn.rover.max_speed == 0.8
    assert scn.rover.spray_range_m == 0.6
    assert scn.detector.tp_rate == (0.9, 0.8)
    assert scn.detector.jitter_px == 1.5
    assert scn.mission.treat_on_detect is True
    assert scn.mission.detect_confidence_threshold == 0.6
    assert scn.mission.gains.stuck_timeout_s == 9.0
    assert scn.seed == 7
    assert scn.bom is not None
    assert [line.name for line in scn.bom.lines] == ["Motor", "GPS Module"]
    assert str(scn.bom.total) == "63.28"
    assert str(scn.bom.printed_total) == "63.28"


def test_comments_and_blank_lines_are_ignored():
    text = "bounds 0 0 20 20  # arena\n\n   \nhome 1 1 # start\n"
    scn = load_scenario(text)
    assert scn.world.home == (1.0, 1.0)


@pytest.mark.parametrize(
    "line, fragment",
    [
        ("bounds 0 0 20", "line 3: bounds needs 4"),
        ("home 1", "line 3: home needs 2"),
        ("obstacle", "line 3: obstacle needs a shape"),
        ("obstacle blob 1 2 3", "unknown obstacle shape"),
        ("obstacle poly 1 2 3 4", "x y pairs"),
        ("site 1 2 3", "site needs"),
        ("node a 2 3 4", "node"),
        ("waypoint x", "bad waypoint id"),
        ("seed -4", "non-negative"),
        ("seed x", "bad seed"),
        ("rover max_speed", "line 3"),
        ("rover bogus=1", "line 3"),
        ("mission treat_on_detect=perhaps", "bad bool"),
        ("bom 1 2", "bom needs"),
        ("bom one 2.00 Thing", "bad bom"),
        ("bom_total 1 2", "bom_total needs one"),
        ("warp 9", "unknown directive"),
    ],
)
def test_malformed_lines_report_line_numbers(line, fragment):
    text = f"bounds 0 0 20 20\nhome 1 1\n{line}\n"
    with pytest.raises(ScenarioError, match=fragment):
        load_scenario(text)


def test_missing_bounds_or_home():
    with pytest.raises(ScenarioError, match="bounds"):
        load_scenario("home 1 1\n")
    with pytest.raises(ScenarioError, match="home"):
        load_scenario("bounds 0 0 20 20\n")


def test_site_outside_bounds_fails_validation():
    text = "bounds 0 0 20 20\nhome 1 1\nsite 1 25 5 0.4 100\n"
    with pytest.raises(ValueError, match="site 1"):
        load_scenario(text)


def test_waypoint_must_reference_a_node():
    text = "bounds 0 0 20 20\nhome 1 1\nwaypoint 3\n"
    with pytest.raises(ValueError):
        load_scenario(text)


def test_bad_rover_params_rejected():
    text = "bounds 0 0 20 20\nhome 1 1\nrover max_speed=-1\n"
    with pytest.raises(ScenarioError, match="max_speed"):
        load_scenario(text)


def test_duplicate_kv_overrides_accumulate():
    text = "bounds 0 0 20 20\nhome 1 1\nrover max_speed=0.5\nrover max_speed=0.7 wheelbase=0.4\n"
    scn = load_scenario(text)
    assert scn.rover.max_speed == 0.7
    assert scn.rover.wheelbase == 0.4


@pytest.mark.parametrize("text", [MINIMAL, FULL])
def test_round_trip_is_a_fixed_point(text):
    scn = load_scenario(text)
    once = serialize_scenario(scn)
    again = serialize_scenario(load_scenario(once))
    assert once == again
    assert load_scenario(once) == scn


@pytest.mark.parametrize("name", ["tcrr.scn", "coverage.scn", "timing.scn"])
def test_shipped_scenarios_round_trip(name):
    text = (SCENARIOS / name).read_text()
    scn = load_scenario(text)
    once = serialize_scenario(scn)
    assert load_scenario(once) == scn
    assert serialize_scenario(load_scenario(once)) == once


def test_serialization_omits_defaults():
    out = serialize_scenario(load_scenario(MINIMAL))
    assert "rover" not in out
    assert "detector" not in out
    assert "mission" not in out
