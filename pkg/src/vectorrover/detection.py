"""Synthetic camera-frame detector with a configurable confusion profile.

Stands in for an onboard neural detector: visible breeding sites project to
ground-truth boxes through a pinhole camera, and detections are sampled from
per-class true-positive rates plus a Poisson false-positive process. All
randomness flows through the caller's seeded generator.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .environment import BreedingSite

CLASS_MOSQUITO = 0
CLASS_BREEDING_SITE = 1
NUM_CLASSES = 2


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate box {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center_x(self) -> float:
        return (self.x_min + self.x_max) / 2.0


@dataclass(frozen=True)
class GroundTruthBox:
    class_id: int
    box: BoundingBox
    site_id: int | None = None


@dataclass(frozen=True)
class Detection:
    class_id: int
    confidence: float
    box: BoundingBox

    def __post_init__(self) -> None:
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class DetectorProfile:
    """Confusion profile; rates are per class ``(mosquito, breeding-site)``."""

    tp_rate: tuple[float, float] = (1.0, 1.0)
    fp_per_frame: float = 0.0
    tp_conf_range: tuple[float, float] = (0.6, 0.99)
    fp_conf_range: tuple[float, float] = (0.3, 0.7)
    jitter_px: float = 0.0
    frame_width: int = 640
    frame_height: int = 480
    focal_px: float = 100.0
    camera_range_m: float = 3.0

    def validate(self) -> None:
        for rate in self.tp_rate:
            if not (0.0 <= rate <= 1.0):
                raise ValueError(f"tp_rate {rate} outside [0, 1]")
        if self.fp_per_frame < 0:
            raise ValueError("fp_per_frame must be >= 0")
        if self.jitter_px < 0:
            raise ValueError("jitter_px must be >= 0")
        if self.frame_width <= 0 or self.frame_height <= 0:
            raise ValueError("frame size must be positive")
        if self.focal_px <= 0:
            raise ValueError("focal_px must be > 0")
        if self.camera_range_m <= 0:
            raise ValueError("camera_range_m must be > 0")

    @property
    def fov(self) -> float:
        """Horizontal camera cone matching the frame edges."""
        return 2.0 * math.atan(self.frame_width / (2.0 * self.focal_px))


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area; 0 when the boxes are disjoint."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def center_offset(det: Detection, frame_width: int) -> float:
    """Horizontal distance from box center to the frame's vertical centerline.

    Negative means the target sits left of center.
    """
    return det.box.center_x - frame_width / 2.0


def bearing_from_offset(offset_px: float, focal_px: float) -> float:
    """Steering bearing (CCW-positive) for a given centerline offset."""
    return -math.atan(offset_px / focal_px)


def poisson(rng: random.Random, lam: float) -> int:
    """Knuth inversion sampler; adequate for the small rates used here."""
    if lam <= 0.0:
        return 0
    limit = math.exp(-lam)
    k = 0
    p = 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def project_site(
    site: BreedingSite,
    rel_bearing: float,
    distance: float,
    profile: DetectorProfile,
) -> GroundTruthBox | None:
    """Pinhole-project one visible site to a ground-truth box.

    Returns None if the projected box clips to nothing at the frame edge.
    """
    w, h = profile.frame_width, profile.frame_height
    if abs(rel_bearing) >= math.pi / 2:
        return None
    cx = w / 2.0 - profile.focal_px * math.tan(rel_bearing)
    size = profile.focal_px * (2.0 * site.radius) / max(distance, 1e-6)
    x_min = max(0.0, cx - size / 2.0)
    x_max = min(float(w), cx + size / 2.0)
    y_min = max(0.0, h / 2.0 - size / 2.0)
    y_max = min(float(h), h / 2.0 + size / 2.0)
    if x_max - x_min < 1.0 or y_max - y_min < 1.0:
        return None
    return GroundTruthBox(
        class_id=CLASS_BREEDING_SITE,
        box=BoundingBox(x_min, y_min, x_max, y_max),
        site_id=site.id,
    )


def _jittered(box: BoundingBox, sigma: float, w: int, h: int, rng: random.Random) -> BoundingBox:
    if sigma == 0.0:
        return box
    coords = [c + rng.gauss(0.0, sigma) for c in (box.x_min, box.y_min, box.x_max, box.y_max)]
    x_lo, x_hi = sorted((coords[0], coords[2]))
    y_lo, y_hi = sorted((coords[1], coords[3]))
    x_lo = max(0.0, min(x_lo, w - 1.0))
    y_lo = max(0.0, min(y_lo, h - 1.0))
    x_hi = min(float(w), max(x_hi, x_lo + 1.0))
    y_hi = min(float(h), max(y_hi, y_lo + 1.0))
    return BoundingBox(x_lo, y_lo, x_hi, y_hi)


def _random_box(profile: DetectorProfile, rng: random.Random) -> BoundingBox:
    w, h = profile.frame_width, profile.frame_height
    bw = rng.uniform(0.05, 0.35) * w
    bh = rng.uniform(0.05, 0.35) * h
    x_min = rng.uniform(0.0, w - bw)
    y_min = rng.uniform(0.0, h - bh)
    return BoundingBox(x_min, y_min, x_min + bw, y_min + bh)


def sample_detections(
    ground_truth: list[GroundTruthBox],
    profile: DetectorProfile,
    rng: random.Random,
) -> list[Detection]:
    """Draw one frame's detections for the given ground truth."""
    detections: list[Detection] = []
    for gt in ground_truth:
        if rng.random() < profile.tp_rate[gt.class_id]:
            box = _jittered(gt.box, profile.jitter_px, profile.frame_width, profile.frame_height, rng)
            conf = rng.uniform(*profile.tp_conf_range)
            detections.append(Detection(gt.class_id, conf, box))
    for _ in range(poisson(rng, profile.fp_per_frame)):
        detections.append(
            Detection(
                class_id=rng.randrange(NUM_CLASSES),
                confidence=rng.uniform(*profile.fp_conf_range),
                box=_random_box(profile, rng),
            )
        )
    return detections


def synthesize_frame(
    visible_sites: list[tuple[BreedingSite, float, float]],
    profile: DetectorProfile,
    rng: random.Random,
) -> tuple[list[GroundTruthBox], list[Detection]]:
    """Project visible sites to ground truth and sample detections for them."""
    profile.validate()
    ground_truth = []
    for site, rel_bearing, distance in visible_sites:
        gt = project_site(site, rel_bearing, distance, profile)
        if gt is not None:
            ground_truth.append(gt)
    return ground_truth, sample_detections(ground_truth, profile, rng)


# Confusion profile shaped like the field detector this simulator stands in
# for: strong on breeding sites, weak on individual mosquitoes, a trickle of
# false positives. Constants tuned against a 10k-frame corpus at seed 42.
REFERENCE_PROFILE = DetectorProfile(
    tp_rate=(0.4932, 0.7538),
    fp_per_frame=0.1864,
    tp_conf_range=(0.6, 0.99),
    fp_conf_range=(0.25, 0.65),
    jitter_px=2.0,
)


def calibration_corpus(
    profile: DetectorProfile,
    frames: int,
    rng: random.Random,
    gt_rates: tuple[float, float] = (1.81, 0.19),
) -> list[tuple[list[GroundTruthBox], list[Detection]]]:
    """Synthetic two-class corpus for scoring a confusion profile.

    Ground-truth objects per frame are Poisson with per-class rates; the
    heavy mosquito share mirrors field footage where sites are the rare
    class. Scenes are random boxes: scoring only depends on geometry
    through IoU, so layout realism is irrelevant here.
    """
    corpus = []
    for _ in range(frames):
        ground_truth = []
        for class_id, lam in enumerate(gt_rates):
            for _ in range(poisson(rng, lam)):
                ground_truth.append(GroundTruthBox(class_id, _random_box(profile, rng)))
        corpus.append((ground_truth, sample_detections(ground_truth, profile, rng)))
    return corpus
