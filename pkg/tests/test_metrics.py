"""Scoring: matching, AP against an independent oracle, money arithmetic."""

import random
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vectorrover.detection import BoundingBox, Detection, GroundTruthBox
from vectorrover.metrics import (
    CostLedger,
    CostLine,
    area_coverage,
    average_precision,
    cost_total,
    evaluate,
    map50,
    match_detections,
    precision,
    recall,
    tcrr,
)


def box(x0, y0=0.0, w=10.0, h=10.0) -> BoundingBox:
    return BoundingBox(x0, y0, x0 + w, y0 + h)


def gt(x0, class_id=1) -> GroundTruthBox:
    return GroundTruthBox(class_id=class_id, box=box(x0))


def det(x0, conf, class_id=1) -> Detection:
    return Detection(class_id=class_id, confidence=conf, box=box(x0))


# --- matching ---------------------------------------------------------------


def test_match_simple_hit_and_miss():
    truth = [gt(0.0), gt(100.0)]
    dets = [det(0.5, 0.9), det(50.0, 0.8)]
    res = match_detections(dets, truth)
    assert res.tp_flags == (True, False)
    assert res.gt_matched == (True, False)
    assert (res.tp, res.fp, res.fn) == (1, 1, 1)


def test_match_one_truth_cannot_be_claimed_twice():
    truth = [gt(0.0)]
    dets = [det(0.5, 0.9), det(1.0, 0.8)]
    res = match_detections(dets, truth)
    assert res.tp_flags == (True, False)


def test_match_higher_confidence_claims_first():
    # lower-confidence detection overlaps better but loses the race
    truth = [gt(0.0)]
    dets = [det(0.0, 0.7), det(3.0, 0.9)]
    res = match_detections(dets, truth)
    assert res.tp_flags == (False, True)


def test_match_confidence_tie_keeps_input_order():
    truth = [gt(0.0)]
    dets = [det(3.0, 0.8), det(0.0, 0.8)]
    res = match_detections(dets, truth)
    assert res.tp_flags == (True, False)


def test_match_iou_tie_keeps_earliest_truth():
    truth = [gt(0.0), gt(0.0)]
    res = match_detections([det(0.0, 0.9)], truth)
    assert res.gt_matched == (True, False)


def test_match_respects_class():
    truth = [gt(0.0, class_id=0)]
    res = match_detections([det(0.0, 0.9, class_id=1)], truth)
    assert res.tp_flags == (False,)


def test_match_threshold_boundary():
    # IoU exactly at the threshold counts as a hit
    truth = [gt(0.0)]
    d = det(5.0, 0.9)  # IoU = 50/150 = 1/3
    assert match_detections([d], truth, iou_threshold=1.0 / 3.0).tp == 1
    assert match_detections([d], truth, iou_threshold=0.34).tp == 0


# --- precision / recall / AP -------------------------------------------------


def test_precision_recall_hand_counts():
    assert precision(3, 1) == 0.75
    assert recall(3, 2) == 0.6
    with pytest.raises(ValueError):
        precision(0, 0)
    with pytest.raises(ValueError):
        recall(0, 0)


def test_average_precision_worked_example():
    # classic three-detection case, 2 truth boxes:
    # conf .9 TP -> (r .5, p 1); conf .8 FP -> (.5, .5); conf .7 TP -> (1, 2/3)
    scored = [(0.9, True), (0.8, False), (0.7, True)]
    ap = average_precision(scored, num_ground_truth=2)
    assert ap == pytest.approx(0.5 * 1.0 + 0.5 * (2.0 / 3.0))


def test_average_precision_perfect_and_empty():
    assert average_precision([(0.9, True), (0.8, True)], 2) == 1.0
    assert average_precision([], 3) == 0.0
    assert average_precision([(0.9, False)], 3) == 0.0
    with pytest.raises(ValueError):
        average_precision([(0.9, True)], 0)


def test_average_precision_groups_tied_confidences():
    # a TP and an FP at the same score form one PR point (p=.5, r=.5),
    # not an optimistic TP-first pair
    scored = [(0.8, True), (0.8, False)]
    assert average_precision(scored, 2) == pytest.approx(0.25)


def ap_oracle(scored: list[tuple[float, bool]], num_gt: int) -> float:
    """Brute-force reference: explicit threshold sweep, O(n^2) envelope.

    For every distinct confidence, recount TP/FP of the thresholded subset
    from scratch; precision at recall r is the max over points with recall
    >= r, found by direct scan.
    """
    if not scored:
        return 0.0
    thresholds = sorted({conf for conf, _ in scored}, reverse=True)
    points = []
    for t in thresholds:
        subset = [flag for conf, flag in scored if conf >= t]
        tp = sum(subset)
        fp = len(subset) - tp
        points.append((tp / num_gt, tp / (tp + fp)))
    ap = 0.0
    prev_r = 0.0
    for r, _ in points:
        best = max(p for rr, p in points if rr >= r)
        ap += (r - prev_r) * best
        prev_r = r
    return ap


@settings(max_examples=300, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.floats(min_value=0.01, max_value=0.99),
            st.booleans(),
        ),
        min_size=0,
        max_size=20,
    ),
    st.integers(min_value=1, max_value=25),
)
def test_average_precision_matches_oracle(scored, extra_gt):
    num_gt = sum(flag for _, flag in scored) + extra_gt
    assert abs(average_precision(scored, num_gt) - ap_oracle(scored, num_gt)) <= 1e-9


def test_map50_mean_over_classes_with_truth():
    per_class = {
        0: [(0.9, True)],
        1: [(0.9, True), (0.8, False)],
    }
    counts = {0: 1, 1: 1}
    assert map50(per_class, counts) == pytest.approx(1.0)
    counts = {0: 2, 1: 1}
    assert map50(per_class, counts) == pytest.approx((0.5 + 1.0) / 2.0)
    with pytest.raises(ValueError):
        map50({}, {})


def test_evaluate_pools_across_frames():
    truth_a = [gt(0.0)]
    truth_b = [gt(0.0), gt(100.0)]
    frames = [
        (truth_a, [det(0.5, 0.9)]),
        (truth_b, [det(0.5, 0.8), det(50.0, 0.7)]),
    ]
    summary = evaluate(frames)
    assert (summary.tp, summary.fp, summary.fn) == (2, 1, 1)
    assert summary.precision == pytest.approx(2.0 / 3.0)
    assert summary.recall == pytest.approx(2.0 / 3.0)
    assert summary.frames == 2


# --- mission effectiveness ----------------------------------------------------


def test_tcrr_hand_values():
    assert tcrr(500.0, 100.0) == pytest.approx(80.0)
    assert tcrr(100.0, 100.0) == 0.0
    assert tcrr(100.0, 0.0) == 100.0
    assert tcrr(0.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        tcrr(-1.0, 0.0)


def test_area_coverage_hand_values():
    assert area_coverage(6, 8) == 75.0
    assert area_coverage(8, 8) == 100.0
    assert area_coverage(0, 8) == 0.0
    assert area_coverage(0, 0) == 100.0
    with pytest.raises(ValueError):
        area_coverage(9, 8)


# --- money --------------------------------------------------------------------


def test_cost_line_exact_cents():
    line = CostLine("Motor", 6, Decimal("7.27"))
    assert line.subtotal == Decimal("43.62")


def test_cost_line_half_up_rounding():
    # 2.675 must round half-up to 2.68; float round() lands on 2.67 because
    # the nearest double sits just below the midpoint
    line = CostLine("Widget", 1, Decimal("2.675"))
    assert line.subtotal == Decimal("2.68")
    assert round(2.675, 2) == 2.67  # the trap this module avoids


def test_cost_line_validation():
    with pytest.raises(ValueError):
        CostLine("x", 0, Decimal("1.00"))
    with pytest.raises(ValueError):
        CostLine("x", 1, Decimal("-1.00"))


def test_cost_total_order_independent():
    a = [CostLine("a", 3, Decimal("0.335")), CostLine("b", 1, Decimal("19.66"))]
    assert cost_total(a) == cost_total(list(reversed(a))) == Decimal("20.67")
    assert cost_total([]) == Decimal("0.00")


def test_cost_ledger_add_and_total():
    ledger = CostLedger()
    ledger.add("GPS Module", 1, "19.66")
    ledger.add("Wheel", 6, 3.85)
    assert ledger.total == Decimal("42.76")


@given(
    st.lists(
        st.tuples(
            st.integers(min_value=1, max_value=9),
            st.decimals(min_value=0, max_value=200, places=2, allow_nan=False),
        ),
        min_size=1,
        max_size=14,
    )
)
def test_cost_total_matches_integer_cent_arithmetic(items):
    # with two-decimal unit prices the subtotal is exact integer cents
    lines = [CostLine(f"item{i}", q, p) for i, (q, p) in enumerate(items)]
    cents = sum(q * int(p * 100) for q, p in items)
    assert cost_total(lines) == Decimal(cents) / Decimal(100)
