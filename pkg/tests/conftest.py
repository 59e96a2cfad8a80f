"""Shared fixtures and helpers for the test suite."""

import pathlib

import pytest

from vectorrover.scenario import Scenario, load_scenario
from vectorrover.telemetry import CommandSession, CommandView

ROOT = pathlib.Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"
GOLDENS = pathlib.Path(__file__).resolve().parent / "goldens"


def load_scn(name: str) -> Scenario:
    return load_scenario((SCENARIOS / name).read_text())


@pytest.fixture
def tcrr_scenario() -> Scenario:
    return load_scn("tcrr.scn")


@pytest.fixture
def coverage_scenario() -> Scenario:
    return load_scn("coverage.scn")


@pytest.fixture
def timing_scenario() -> Scenario:
    return load_scn("timing.scn")


class ScriptedLink:
    """Command session fed from a schedule of (clock_s, frame) pairs.

    Stands in for the UDP link inside the simulation loop so tests can
    inject command frames at exact ticks.
    """

    def __init__(self, schedule: list[tuple[float, bytes]], manual_timeout_s: float = 1.0):
        self.session = CommandSession(manual_timeout_s=manual_timeout_s)
        self._pending = sorted(schedule, key=lambda item: item[0])

    def view(self, clock_s: float) -> CommandView:
        while self._pending and self._pending[0][0] <= clock_s:
            _, frame = self._pending.pop(0)
            self.session.ingest(frame, clock_s)
        return self.session.view(clock_s)

    def drain_outbox(self) -> list[bytes]:
        return self.session.drain_outbox()
