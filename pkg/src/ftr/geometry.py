"""Axis-aligned box arithmetic, anchor grids and suppression algorithms.

Everything downstream (detection, segmentation, evaluation) trades in the
types defined here. Boxes are real-valued pixel rectangles in image frame
(y grows downward).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class BBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"non-finite box coordinates: {coords}")
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ValueError(f"degenerate box: {coords}")

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
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    def contains(self, other: "BBox", tol: float = 1e-9) -> bool:
        return (self.x_min <= other.x_min + tol and self.y_min <= other.y_min + tol
                and self.x_max >= other.x_max - tol and self.y_max >= other.y_max - tol)


@dataclass(frozen=True)
class ScoredBox:
    box: BBox
    label: str
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score outside [0,1]: {self.score}")


@dataclass(frozen=True)
class AnchorSpec:
    """Anchor grid parameters. Defaults follow the square-character scheme:
    four base sizes and four aspect ratios, 16 anchors per location."""
    levels: tuple[float, ...] = (4.0, 8.0, 16.0, 32.0)
    ratios: tuple[float, ...] = (0.8, 1.0, 1.2, 1.5)
    stride: float = 1.0

    def __post_init__(self):
        if not self.levels or not self.ratios:
            raise ValueError("anchor spec needs at least one level and one ratio")
        if any(s <= 0 for s in self.levels) or any(r <= 0 for r in self.ratios):
            raise ValueError("anchor sizes and ratios must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes. Symmetric, 0 when disjoint."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def _greedy_suppress(boxes: Sequence[ScoredBox], threshold: float,
                     same_group) -> list[ScoredBox]:
    # stable sort keeps input order on score ties -> deterministic output
    order = sorted(range(len(boxes)), key=lambda i: -boxes[i].score)
    kept: list[ScoredBox] = []
    for i in order:
        cand = boxes[i]
        if all(not same_group(cand, k) or iou(cand.box, k.box) < threshold
               for k in kept):
            kept.append(cand)
    return kept


def standard_nms(boxes: Sequence[ScoredBox], iou_threshold: float = 0.5) -> list[ScoredBox]:
    """Greedy per-label NMS: overlapping boxes of *different* labels coexist."""
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold outside (0,1): {iou_threshold}")
    return _greedy_suppress(boxes, iou_threshold, lambda a, b: a.label == b.label)


def lucnms(boxes: Sequence[ScoredBox], position_iou_threshold: float = 0.3) -> list[ScoredBox]:
    """Location-unique suppression: at most one character survives per position.

    Greedy by descending score *ignoring labels*; ties broken by input order.
    Output is sorted by descending score.
    """
    if not 0.0 < position_iou_threshold < 1.0:
        raise ValueError(f"position_iou_threshold outside (0,1): {position_iou_threshold}")
    return _greedy_suppress(boxes, position_iou_threshold, lambda a, b: True)


def generate_anchors(spec: AnchorSpec, grid_width: float, grid_height: float) -> list[BBox]:
    """Anchors centered on a stride grid; |levels|*|ratios| boxes per location.

    A base size s at ratio r yields width s*sqrt(r) and height s/sqrt(r),
    preserving area s^2.
    """
    if not spec.levels or not spec.ratios:
        raise ValueError("anchor spec needs at least one level and one ratio")
    if grid_width < spec.stride or grid_height < spec.stride:
        raise ValueError("grid smaller than stride")
    shapes = [(s * math.sqrt(r), s / math.sqrt(r)) for s in spec.levels for r in spec.ratios]
    anchors: list[BBox] = []
    ny = int(grid_height // spec.stride)
    nx = int(grid_width // spec.stride)
    for iy in range(ny):
        cy = (iy + 0.5) * spec.stride
        for ix in range(nx):
            cx = (ix + 0.5) * spec.stride
            for w, h in shapes:
                anchors.append(BBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2))
    return anchors
