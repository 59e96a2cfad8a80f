"""Regenerate the checked-in golden fixtures under tests/goldens/.

Run from the repository root after any deliberate protocol or report format
change, then review the diff before committing:

    python3 tools/gen_goldens.py

Fixture values are exact binary fractions so they survive the f32 round trip
and compare cleanly as JSON numbers.
"""

import json
import pathlib

from vectorrover import telemetry as tm
from vectorrover.cli import _machine_doc
from vectorrover.scenario import load_scenario
from vectorrover.scheduler import RunConfig, run
from vectorrover.service import message_to_mirror, world_hello

ROOT = pathlib.Path(__file__).resolve().parent.parent
GOLDENS = ROOT / "tests" / "goldens"

CATALOG_CASES = [
    (tm.Heartbeat(mode=1, clock_s=2.5), 3),
    (
        tm.Telemetry(
            x=12.5,
            y=3.25,
            heading=-1.5,
            battery_mah=250.5,
            reservoir_ml=37.5,
            fsm_state=1,
            gps_x=12.75,
            gps_y=3.5,
        ),
        17,
    ),
    (
        tm.DetectionEvent(
            class_id=0,
            confidence=0.8125,
            x_min=101.5,
            y_min=52.25,
            x_max=160.0,
            y_max=120.75,
            site_id=4,
        ),
        40,
    ),
    (tm.SprayEvent(site_ids=(2, 7), reservoir_ml=310.0), 41),
    (tm.NodeReached(node_id=5, clock_s=33.5), 42),
    (tm.CommandMode(target_mode=2), 1000000),
    (tm.CommandManual(linear=0.75, angular=-0.25, spray=1), 1000001),
    (tm.MissionUpload(waypoint_ids=(1, 2, 3, 4)), 1000002),
    (tm.Ack(acked_seq=1000002, status=0), 9),
]


def catalog_goldens() -> list[dict]:
    entries = []
    for msg, seq in CATALOG_CASES:
        frame = tm.encode(msg, seq)
        entries.append(
            {
                "type": type(msg).__name__,
                "seq": seq,
                "hex": frame.hex(),
                "mirror": message_to_mirror(msg, seq),
            }
        )
    return entries


def main() -> None:
    GOLDENS.mkdir(parents=True, exist_ok=True)

    path = GOLDENS / "catalog_goldens.json"
    path.write_text(json.dumps(catalog_goldens(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")

    scn_path = ROOT / "scenarios" / "tcrr.scn"
    scenario = load_scenario(scn_path.read_text())

    hello = world_hello(scenario)
    path = GOLDENS / "world_hello_tcrr.json"
    path.write_text(json.dumps(hello, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")

    report, _trace = run(RunConfig(scenario_path=scn_path, seed=42), scenario=scenario)
    doc = _machine_doc(report, scenario)
    path = GOLDENS / "report_tcrr.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
