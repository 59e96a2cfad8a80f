"""Scenario text format.

Line-oriented key-value documents describing an arena, a mission and the
tunable subsystem parameters. Files diff cleanly and round-trip through
serialize without loss.

Core directives:
    bounds <xmin> <ymin> <xmax> <ymax>
    home <x> <y>
    obstacle circle <x> <y> <r>
    obstacle poly <x1> <y1> <x2> <y2> ...
    site <id> <x> <y> <r> <pre_population>
    node <id> <x> <y> <accept_r>
    waypoint <node-id>
    rover <key>=<value> ...
    detector <key>=<value> ...
    seed <u64>

Extensions:
    mission <key>=<value> ...      controller gains and treatment policy
    bom <qty> <unit_price> <name>  cost-ledger line item
    bom_total <usd>                vendor-quoted total, kept for comparison
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from decimal import Decimal

from .autonomy import ControllerGains, Mission
from .detection import DetectorProfile
from .environment import BreedingSite, CheckpointNode, CircleObstacle, PolygonObstacle, WorldMap
from .metrics import CostLedger
from .rover import RoverParams


class ScenarioError(ValueError):
    """Parse or validation failure, message carries the line number."""


@dataclass
class Scenario:
    world: WorldMap
    mission: Mission
    rover: RoverParams
    detector: DetectorProfile
    seed: int | None = None
    bom: CostLedger | None = None


def _floats(parts: list[str], ln: int, what: str) -> list[float]:
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ScenarioError(f"line {ln}: bad number in {what}: {exc}") from None


def _kv_pairs(parts: list[str], ln: int) -> dict[str, str]:
    out = {}
    for part in parts:
        if "=" not in part:
            raise ScenarioError(f"line {ln}: expected key=value, got {part!r}")
        key, value = part.split("=", 1)
        out[key] = value
    return out


_BOOL = {"true": True, "false": False, "1": True, "0": False}


def _coerce(field: dataclasses.Field, raw: str, ln: int):
    base = field.type
    try:
        if base == "bool":
            return _BOOL[raw.lower()]
        if base == "int":
            return int(raw)
        if base == "float":
            return float(raw)
        if base.startswith("tuple"):
            items = [p for p in raw.split(",") if p != ""]
            if "int" in base:
                return tuple(int(p) for p in items)
            return tuple(float(p) for p in items)
    except (ValueError, KeyError) as exc:
        raise ScenarioError(f"line {ln}: bad value for {field.name}: {raw!r}") from None
    raise ScenarioError(f"line {ln}: cannot parse {field.name} of type {base}")


def _apply_kv(cls, current, pairs: dict[str, str], ln: int):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    updates = {}
    for key, raw in pairs.items():
        if key not in fields:
            raise ScenarioError(f"line {ln}: unknown {cls.__name__} key {key!r}")
        updates[key] = _coerce(fields[key], raw, ln)
    return dataclasses.replace(current, **updates)


def load_scenario(text: str) -> Scenario:
    bounds: tuple[float, float, float, float] | None = None
    home: tuple[float, float] | None = None
    obstacles: list = []
    sites: list[BreedingSite] = []
    nodes: list[CheckpointNode] = []
    waypoints: list[int] = []
    rover = RoverParams()
    detector = DetectorProfile()
    gains = ControllerGains()
    treat_on_detect = True
    detect_threshold = 0.5
    seed: int | None = None
    bom: CostLedger | None = None

    for ln, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        directive, args = parts[0], parts[1:]

        if directive == "bounds":
            if len(args) != 4:
                raise ScenarioError(f"line {ln}: bounds needs 4 numbers")
            b = _floats(args, ln, "bounds")
            bounds = (b[0], b[1], b[2], b[3])
        elif directive == "home":
            if len(args) != 2:
                raise ScenarioError(f"line {ln}: home needs 2 numbers")
            h = _floats(args, ln, "home")
            home = (h[0], h[1])
        elif directive == "obstacle":
            if not args:
                raise ScenarioError(f"line {ln}: obstacle needs a shape")
            shape, rest = args[0], args[1:]
            if shape == "circle":
                if len(rest) != 3:
                    raise ScenarioError(f"line {ln}: obstacle circle needs x y r")
                x, y, r = _floats(rest, ln, "obstacle circle")
                obstacles.append(CircleObstacle((x, y), r))
            elif shape == "poly":
                vals = _floats(rest, ln, "obstacle poly")
                if len(vals) < 6 or len(vals) % 2:
                    raise ScenarioError(f"line {ln}: obstacle poly needs 3+ x y pairs")
                verts = tuple((vals[i], vals[i + 1]) for i in range(0, len(vals), 2))
                obstacles.append(PolygonObstacle(verts))
            else:
                raise ScenarioError(f"line {ln}: unknown obstacle shape {shape!r}")
        elif directive == "site":
            if len(args) != 5:
                raise ScenarioError(f"line {ln}: site needs id x y r pre_population")
            vals = _floats(args, ln, "site")
            sites.append(BreedingSite(int(vals[0]), (vals[1], vals[2]), vals[3], vals[4]))
        elif directive == "node":
            if len(args) != 4:
                raise ScenarioError(f"line {ln}: node needs id x y accept_r")
            vals = _floats(args, ln, "node")
            nodes.append(CheckpointNode(int(vals[0]), (vals[1], vals[2]), vals[3]))
        elif directive == "waypoint":
            if len(args) != 1:
                raise ScenarioError(f"line {ln}: waypoint needs a node id")
            try:
                waypoints.append(int(args[0]))
            except ValueError:
                raise ScenarioError(f"line {ln}: bad waypoint id {args[0]!r}") from None
        elif directive == "rover":
            rover = _apply_kv(RoverParams, rover, _kv_pairs(args, ln), ln)
        elif directive == "detector":
            detector = _apply_kv(DetectorProfile, detector, _kv_pairs(args, ln), ln)
        elif directive == "mission":
            pairs = _kv_pairs(args, ln)
            if "treat_on_detect" in pairs:
                raw = pairs.pop("treat_on_detect").lower()
                if raw not in _BOOL:
                    raise ScenarioError(f"line {ln}: bad bool {raw!r}")
                treat_on_detect = _BOOL[raw]
            if "detect_confidence_threshold" in pairs:
                try:
                    detect_threshold = float(pairs.pop("detect_confidence_threshold"))
                except ValueError:
                    raise ScenarioError(f"line {ln}: bad confidence threshold") from None
            gains = _apply_kv(ControllerGains, gains, pairs, ln)
        elif directive == "seed":
            if len(args) != 1:
                raise ScenarioError(f"line {ln}: seed needs one integer")
            try:
                seed = int(args[0])
            except ValueError:
                raise ScenarioError(f"line {ln}: bad seed {args[0]!r}") from None
            if seed < 0:
                raise ScenarioError(f"line {ln}: seed must be non-negative")
        elif directive == "bom":
            if len(args) < 3:
                raise ScenarioError(f"line {ln}: bom needs qty unit_price name")
            try:
                qty = int(args[0])
                price = Decimal(args[1])
            except (ValueError, ArithmeticError):
                raise ScenarioError(f"line {ln}: bad bom quantity or price") from None
            if bom is None:
                bom = CostLedger()
            bom.add(" ".join(args[2:]), qty, price)
        elif directive == "bom_total":
            if len(args) != 1:
                raise ScenarioError(f"line {ln}: bom_total needs one amount")
            if bom is None:
                bom = CostLedger()
            try:
                bom.printed_total = Decimal(args[0])
            except ArithmeticError:
                raise ScenarioError(f"line {ln}: bad bom_total {args[0]!r}") from None
        else:
            raise ScenarioError(f"line {ln}: unknown directive {directive!r}")

    if bounds is None:
        raise ScenarioError("scenario is missing a bounds line")
    if home is None:
        raise ScenarioError("scenario is missing a home line")

    try:
        rover.validate()
        detector.validate()
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None

    world = WorldMap(bounds=bounds, home=home, obstacles=obstacles, sites=sites, nodes=nodes)
    world.validate()
    mission = Mission(
        waypoints=waypoints,
        home=home,
        treat_on_detect=treat_on_detect,
        detect_confidence_threshold=detect_threshold,
        gains=gains,
    )
    mission.validate(world)
    return Scenario(world=world, mission=mission, rover=rover, detector=detector, seed=seed, bom=bom)


def _num(value: float) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return repr(value)


def _kv_line(directive: str, current, defaults) -> str | None:
    parts = []
    for f in dataclasses.fields(current):
        have = getattr(current, f.name)
        want = getattr(defaults, f.name)
        if have == want:
            continue
        if isinstance(have, bool):
            parts.append(f"{f.name}={'true' if have else 'false'}")
        elif isinstance(have, tuple):
            parts.append(f"{f.name}={','.join(_num(v) for v in have)}")
        elif isinstance(have, float):
            parts.append(f"{f.name}={_num(have)}")
        else:
            parts.append(f"{f.name}={have}")
    if not parts:
        return None
    return f"{directive} " + " ".join(parts)


def serialize_scenario(scn: Scenario) -> str:
    """Render back to the text grammar; load(serialize(x)) == x."""
    w = scn.world
    out = [
        "bounds " + " ".join(_num(v) for v in w.bounds),
        f"home {_num(w.home[0])} {_num(w.home[1])}",
    ]
    for obs in w.obstacles:
        if isinstance(obs, CircleObstacle):
            out.append(f"obstacle circle {_num(obs.center[0])} {_num(obs.center[1])} {_num(obs.radius)}")
        else:
            coords = " ".join(f"{_num(x)} {_num(y)}" for x, y in obs.vertices)
            out.append(f"obstacle poly {coords}")
    for site in w.sites:
        out.append(
            f"site {site.id} {_num(site.center[0])} {_num(site.center[1])} "
            f"{_num(site.radius)} {_num(site.pre_population)}"
        )
    for node in w.nodes:
        out.append(
            f"node {node.id} {_num(node.center[0])} {_num(node.center[1])} {_num(node.acceptance_radius)}"
        )
    for wp in scn.mission.waypoints:
        out.append(f"waypoint {wp}")
    line = _kv_line("rover", scn.rover, RoverParams())
    if line:
        out.append(line)
    line = _kv_line("detector", scn.detector, DetectorProfile())
    if line:
        out.append(line)
    mission_parts = []
    if not scn.mission.treat_on_detect:
        mission_parts.append("treat_on_detect=false")
    if scn.mission.detect_confidence_threshold != 0.5:
        mission_parts.append(f"detect_confidence_threshold={_num(scn.mission.detect_confidence_threshold)}")
    gains_line = _kv_line("mission", scn.mission.gains, ControllerGains())
    if gains_line:
        mission_parts.append(gains_line.removeprefix("mission "))
    if mission_parts:
        out.append("mission " + " ".join(mission_parts))
    if scn.seed is not None:
        out.append(f"seed {scn.seed}")
    if scn.bom is not None:
        for item in scn.bom.lines:
            out.append(f"bom {item.quantity} {item.unit_price} {item.name}")
        if scn.bom.printed_total is not None:
            out.append(f"bom_total {scn.bom.printed_total}")
    return "\n".join(out) + "\n"
