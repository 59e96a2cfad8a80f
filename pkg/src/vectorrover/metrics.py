"""Evaluation metrics and mission reporting.

Detection quality (matching, precision/recall, AP), mission effectiveness
(treatment coverage, checkpoint coverage), bill-of-materials accounting and
the end-of-run report assembled from a trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_UP

from .autonomy import FsmState, MissionStatus
from .detection import Detection, GroundTruthBox, NUM_CLASSES, iou
from .environment import WorldMap
from .events import TickRecord


# --- detection matching ---------------------------------------------------


@dataclass(frozen=True)
class MatchResult:
    """Greedy confidence-ordered assignment of detections to ground truth.

    tp_flags aligns with the input detection order; gt_matched aligns with
    the ground-truth order.
    """

    tp_flags: tuple[bool, ...]
    gt_matched: tuple[bool, ...]

    @property
    def tp(self) -> int:
        return sum(self.tp_flags)

    @property
    def fp(self) -> int:
        return len(self.tp_flags) - self.tp

    @property
    def fn(self) -> int:
        return len(self.gt_matched) - sum(self.gt_matched)


def match_detections(
    detections: list[Detection],
    ground_truth: list[GroundTruthBox],
    iou_threshold: float = 0.5,
) -> MatchResult:
    """Each detection claims the highest-IoU unclaimed same-class truth box.

    Detections are visited in descending confidence; ties keep input order
    so results do not depend on sort instability.
    """
    order = sorted(range(len(detections)), key=lambda i: (-detections[i].confidence, i))
    tp_flags = [False] * len(detections)
    gt_matched = [False] * len(ground_truth)
    for di in order:
        det = detections[di]
        best_iou = -1.0
        best_gi = -1
        for gi, gt in enumerate(ground_truth):
            if gt_matched[gi] or gt.class_id != det.class_id:
                continue
            overlap = iou(det.box, gt.box)
            # strict > keeps the earliest truth box on exact ties
            if overlap >= iou_threshold and overlap > best_iou:
                best_iou = overlap
                best_gi = gi
        if best_gi >= 0:
            tp_flags[di] = True
            gt_matched[best_gi] = True
    return MatchResult(tuple(tp_flags), tuple(gt_matched))


def precision(tp: int, fp: int) -> float:
    if tp + fp == 0:
        raise ValueError("precision undefined with no positive predictions")
    return tp / (tp + fp)


def recall(tp: int, fn: int) -> float:
    if tp + fn == 0:
        raise ValueError("recall undefined with no ground-truth positives")
    return tp / (tp + fn)


def average_precision(
    scored: list[tuple[float, bool]],
    num_ground_truth: int,
) -> float:
    """All-point interpolated AP from (confidence, is_tp) pairs.

    One PR point per distinct confidence value: detections sharing a score
    enter or leave a thresholded set together, so splitting them would
    manufacture operating points no threshold can realize.
    """
    if num_ground_truth <= 0:
        raise ValueError("average precision undefined without ground truth")
    if not scored:
        return 0.0
    ordered = sorted(scored, key=lambda s: -s[0])
    points: list[tuple[float, float]] = []  # (recall, precision)
    tp = 0
    fp = 0
    i = 0
    n = len(ordered)
    while i < n:
        j = i
        while j < n and ordered[j][0] == ordered[i][0]:
            tp += 1 if ordered[j][1] else 0
            fp += 0 if ordered[j][1] else 1
            j += 1
        points.append((tp / num_ground_truth, tp / (tp + fp)))
        i = j
    # precision envelope, then sum rectangles between successive recalls
    ap = 0.0
    prev_recall = 0.0
    best_after = 0.0
    envelope: list[tuple[float, float]] = []
    for r, p in reversed(points):
        best_after = max(best_after, p)
        envelope.append((r, best_after))
    envelope.reverse()
    for r, p in envelope:
        ap += (r - prev_recall) * p
        prev_recall = r
    return ap


def map50(per_class_scored: dict[int, list[tuple[float, bool]]], gt_counts: dict[int, int]) -> float:
    """Mean AP over every class that has ground truth."""
    aps = []
    for class_id, count in sorted(gt_counts.items()):
        if count <= 0:
            continue
        aps.append(average_precision(per_class_scored.get(class_id, []), count))
    if not aps:
        raise ValueError("mAP undefined without ground truth in any class")
    return sum(aps) / len(aps)


@dataclass
class EvalSummary:
    precision: float
    recall: float
    map50: float
    tp: int
    fp: int
    fn: int
    frames: int


def evaluate(
    frames: list[tuple[list[GroundTruthBox], list[Detection]]],
    iou_threshold: float = 0.5,
) -> EvalSummary:
    """Corpus-level detector scorecard.

    Matching runs per frame; counts and scored detections pool across the
    corpus, AP per class over the pooled lists.
    """
    tp = fp = fn = 0
    per_class: dict[int, list[tuple[float, bool]]] = {c: [] for c in range(NUM_CLASSES)}
    gt_counts: dict[int, int] = {c: 0 for c in range(NUM_CLASSES)}
    for ground_truth, detections in frames:
        result = match_detections(detections, ground_truth, iou_threshold)
        tp += result.tp
        fp += result.fp
        fn += result.fn
        for det, flag in zip(detections, result.tp_flags):
            per_class.setdefault(det.class_id, []).append((det.confidence, flag))
        for gt in ground_truth:
            gt_counts[gt.class_id] = gt_counts.get(gt.class_id, 0) + 1
    return EvalSummary(
        precision=precision(tp, fp),
        recall=recall(tp, fn),
        map50=map50(per_class, {c: k for c, k in gt_counts.items() if k > 0}),
        tp=tp,
        fp=fp,
        fn=fn,
        frames=len(frames),
    )


# --- mission effectiveness ------------------------------------------------


def tcrr(pre_population: float, post_population: float) -> float:
    """Treatment-coverage reduction, percent of pre-mission population removed."""
    if pre_population < 0 or post_population < 0:
        raise ValueError("populations cannot be negative")
    if pre_population == 0:
        return 0.0
    return (1.0 - post_population / pre_population) * 100.0


def area_coverage(nodes_reached: int, nodes_total: int) -> float:
    """Percent of mission checkpoints actually visited."""
    if nodes_reached < 0 or nodes_total < 0 or nodes_reached > nodes_total:
        raise ValueError("invalid checkpoint counts")
    if nodes_total == 0:
        return 100.0
    return nodes_reached / nodes_total * 100.0


# --- bill of materials ----------------------------------------------------

_CENT = Decimal("0.01")


@dataclass(frozen=True)
class CostLine:
    name: str
    quantity: int
    unit_price: Decimal

    def __post_init__(self) -> None:
        if self.quantity <= 0:
            raise ValueError("quantity must be positive")
        if self.unit_price < 0:
            raise ValueError("unit price cannot be negative")

    @property
    def subtotal(self) -> Decimal:
        return (self.unit_price * self.quantity).quantize(_CENT, rounding=ROUND_HALF_UP)


@dataclass
class CostLedger:
    lines: list[CostLine] = field(default_factory=list)
    printed_total: Decimal | None = None

    def add(self, name: str, quantity: int, unit_price: str | float | Decimal) -> None:
        self.lines.append(CostLine(name, quantity, Decimal(str(unit_price))))

    @property
    def total(self) -> Decimal:
        return cost_total(self.lines)


def cost_total(lines: list[CostLine]) -> Decimal:
    """Sum of line subtotals, exact cents."""
    total = Decimal("0.00")
    for line in lines:
        total += line.subtotal
    return total.quantize(_CENT, rounding=ROUND_HALF_UP)


# --- mission report -------------------------------------------------------


@dataclass
class MissionReport:
    outcome: str
    mission_time_s: float
    tcrr_pct: float
    coverage_pct: float
    nodes_total: int
    nodes_reached: list[int]
    nodes_skipped: list[int]
    sites_total: int
    sites_treated: list[int]
    sprays_attempted: int
    sprays_rejected: int
    battery_used_mah: float
    reservoir_used_ml: float
    distance_m: float
    pre_population: float
    post_population: float

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "mission_time_s": round(self.mission_time_s, 3),
            "tcrr_pct": round(self.tcrr_pct, 4),
            "coverage_pct": round(self.coverage_pct, 4),
            "nodes_total": self.nodes_total,
            "nodes_reached": list(self.nodes_reached),
            "nodes_skipped": list(self.nodes_skipped),
            "sites_total": self.sites_total,
            "sites_treated": list(self.sites_treated),
            "sprays_attempted": self.sprays_attempted,
            "sprays_rejected": self.sprays_rejected,
            "battery_used_mah": round(self.battery_used_mah, 3),
            "reservoir_used_ml": round(self.reservoir_used_ml, 3),
            "distance_m": round(self.distance_m, 3),
            "pre_population": self.pre_population,
            "post_population": self.post_population,
        }


def mission_report(status: MissionStatus, world: WorldMap, records: list[TickRecord]) -> MissionReport:
    """Fold a finished run into the headline numbers."""
    treated = set(status.sites_treated)
    pre = sum(site.pre_population for site in world.sites)
    post = sum(site.pre_population for site in world.sites if site.id not in treated)
    sprays = sprays_rejected = 0
    distance = 0.0
    battery_used = 0.0
    reservoir_used = 0.0
    if records:
        first, last = records[0], records[-1]
        battery_used = first.battery_mah - last.battery_mah
        reservoir_used = first.reservoir_ml - last.reservoir_ml
        px, py = first.x, first.y
        for rec in records[1:]:
            distance += math.hypot(rec.x - px, rec.y - py)
            px, py = rec.x, rec.y
        for rec in records:
            for ev in rec.events:
                if ev.kind == "SPRAY":
                    sprays += 1
                elif ev.kind == "SPRAY_REJECTED":
                    sprays_rejected += 1
                    sprays += 1
    if status.fsm_state == FsmState.DONE:
        outcome = "completed"
    elif status.fsm_state == FsmState.FAULT:
        outcome = "fault"
    else:
        outcome = "incomplete"
    end = status.end_clock_s if status.end_clock_s is not None else (records[-1].clock_s if records else 0.0)
    # checkpoints the mission was asked to visit, not every node on the map
    asked = len(status.nodes_reached) + len(status.nodes_skipped)
    total_nodes = max(asked, len(world.nodes)) if world.nodes else asked
    return MissionReport(
        outcome=outcome,
        mission_time_s=end - status.start_clock_s,
        tcrr_pct=tcrr(pre, post),
        coverage_pct=area_coverage(len(status.nodes_reached), total_nodes),
        nodes_total=total_nodes,
        nodes_reached=list(status.nodes_reached),
        nodes_skipped=list(status.nodes_skipped),
        sites_total=len(world.sites),
        sites_treated=sorted(treated),
        sprays_attempted=sprays,
        sprays_rejected=sprays_rejected,
        battery_used_mah=battery_used,
        reservoir_used_ml=reservoir_used,
        distance_m=distance,
        pre_population=pre,
        post_population=post,
    )


def render_report(report: MissionReport) -> str:
    """Human-readable block for the CLI."""
    lines = [
        f"outcome        {report.outcome}",
        f"mission time   {report.mission_time_s:.1f} s",
        f"TCRR {report.tcrr_pct:.1f}%  ({len(report.sites_treated)}/{report.sites_total} sites treated)",
        f"coverage {report.coverage_pct:.1f}%  ({len(report.nodes_reached)}/{report.nodes_total} checkpoints)",
        f"sprays         {report.sprays_attempted} attempted, {report.sprays_rejected} rejected",
        f"battery used   {report.battery_used_mah:.1f} mAh",
        f"reservoir used {report.reservoir_used_ml:.1f} ml",
        f"distance       {report.distance_m:.1f} m",
    ]
    if report.nodes_skipped:
        lines.append("skipped nodes      " + ", ".join(str(n) for n in report.nodes_skipped))
    return "\n".join(lines)
