"""Command-line entry point.

validate / run / replay / report / serve. Every subcommand is
non-interactive; exit code 0 means success, 2 means the scenario or trace
file was not found, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .metrics import render_report
from .scenario import Scenario, ScenarioError, load_scenario
from .scheduler import RunConfig, TraceLog, replay, run


def _load(path: str) -> Scenario:
    p = Path(path)
    if not p.exists():
        print(f"scenario not found: {path}", file=sys.stderr)
        raise SystemExit(2)
    try:
        return load_scenario(p.read_text())
    except (ScenarioError, ValueError) as exc:
        print(f"invalid scenario {path}: {exc}", file=sys.stderr)
        raise SystemExit(1) from None


def _machine_doc(report, scenario: Scenario) -> dict:
    doc: dict = {"format": 1, "report": report.to_dict()}
    if scenario.bom is not None:
        doc["bom"] = {
            "lines": [
                {
                    "name": line.name,
                    "quantity": line.quantity,
                    "unit_price": str(line.unit_price),
                    "subtotal": str(line.subtotal),
                }
                for line in scenario.bom.lines
            ],
            "computed_total": str(scenario.bom.total),
            "quoted_total": (
                str(scenario.bom.printed_total) if scenario.bom.printed_total is not None else None
            ),
        }
    else:
        doc["bom"] = None
    return doc


def _render_bom(scenario: Scenario) -> str:
    bom = scenario.bom
    assert bom is not None
    width = max(len(line.name) for line in bom.lines)
    rows = ["bill of materials:"]
    for line in bom.lines:
        rows.append(f"  {line.name:<{width}}  {line.quantity} x {line.unit_price} = {line.subtotal}")
    rows.append(f"  {'Total':<{width}}  {bom.total}")
    if bom.printed_total is not None and bom.printed_total != bom.total:
        rows.append(f"  {'Quoted total':<{width}}  {bom.printed_total} (differs from computed)")
    return "\n".join(rows)


def _emit(report, scenario: Scenario, fmt: str) -> None:
    if fmt == "machine":
        print(json.dumps(_machine_doc(report, scenario), indent=2, sort_keys=True))
    else:
        print(render_report(report))
        if scenario.bom is not None:
            print(_render_bom(scenario))


def _cmd_validate(args) -> int:
    scn = _load(args.scenario)
    w = scn.world
    print(
        f"ok: bounds {w.bounds}, {len(w.obstacles)} obstacles, "
        f"{len(w.sites)} sites, {len(w.nodes)} nodes, "
        f"{len(scn.mission.waypoints)} waypoints"
    )
    return 0


def _run_config(args) -> RunConfig:
    return RunConfig(
        scenario_path=args.scenario,
        seed=args.seed,
        dt_s=args.dt,
        max_sim_time_s=args.max_time,
        realtime_factor=args.realtime,
        udp_port=args.udp_port,
        mirror_port=args.mirror_port,
    )


def _cmd_run(args) -> int:
    scn = _load(args.scenario)
    config = _run_config(args)
    report, trace = run(config, scenario=scn)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = Path(args.scenario).stem
        trace.save(out / f"{stem}.trace")
        (out / f"{stem}.report.json").write_text(
            json.dumps(_machine_doc(report, scn), indent=2, sort_keys=True) + "\n"
        )
    _emit(report, scn, args.format)
    return 0


def _load_trace(path: str) -> TraceLog:
    p = Path(path)
    if not p.exists():
        print(f"trace not found: {path}", file=sys.stderr)
        raise SystemExit(2)
    try:
        return TraceLog.load(p)
    except ValueError as exc:
        print(f"corrupt trace {path}: {exc}", file=sys.stderr)
        raise SystemExit(1) from None


def _cmd_replay(args) -> int:
    scn = _load(args.scenario)
    trace = _load_trace(args.trace)
    report = replay(trace, scn)
    _emit(report, scn, args.format)
    return 0


def _cmd_serve(args) -> int:
    from .service import GroundLink, ServiceError

    scn = _load(args.scenario)
    config = _run_config(args)
    try:
        link = GroundLink(
            udp_port=args.udp_port,
            mirror_port=args.mirror_port,
            enable_mirror=not args.no_mirror,
            scenario=scn,
        )
    except ServiceError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    link.start()
    print(f"udp endpoint on {link.udp_port}", file=sys.stderr)
    if not args.no_mirror:
        print(f"mirror on ws://127.0.0.1:{link.mirror_port}/ws", file=sys.stderr)
    try:
        report, trace = run(config, scenario=scn, session=link, publish=link.publish)
    finally:
        link.stop()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = Path(args.scenario).stem
        trace.save(out / f"{stem}.trace")
    _emit(report, scn, args.format)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="vectorrover", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, realtime_default: float) -> None:
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--dt", type=float, default=0.1)
        p.add_argument("--max-time", type=float, default=600.0)
        p.add_argument("--realtime", type=float, default=realtime_default)
        p.add_argument("--udp-port", type=int, default=14550)
        p.add_argument("--mirror-port", type=int, default=8080)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("human", "machine"), default="human")

    p = sub.add_parser("validate", help="parse and validate a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("run", help="simulate a mission as fast as possible")
    p.add_argument("scenario")
    common(p, realtime_default=0.0)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("replay", help="recompute a report from a recorded trace")
    p.add_argument("trace")
    p.add_argument("scenario")
    p.add_argument("--format", choices=("human", "machine"), default="human")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("report", help="render a recorded trace as a report")
    p.add_argument("trace")
    p.add_argument("scenario")
    p.add_argument("--format", choices=("human", "machine"), default="human")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("serve", help="run a mission while exposing the ground link")
    p.add_argument("scenario")
    common(p, realtime_default=1.0)
    p.add_argument("--no-mirror", action="store_true", help="UDP only, skip the WebSocket mirror")
    p.set_defaults(func=_cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
