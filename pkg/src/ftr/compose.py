"""Reading-order assembly and key-value structuring of recognized characters."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .geometry import BBox
from .recognize import Prediction
from .segment import SegmentationOutput

PLACEHOLDER = "□"  # rendered for queued-and-uncorrected glyphs
LINE_OVERLAP = 0.5
ADJACENCY_OVERLAP = 0.5
SEPARATORS = ":：;,"


@dataclass(frozen=True)
class CharResult:
    bbox: BBox
    char: str
    confidence: float
    source: str  # segmenter | classifier | manual

    def __post_init__(self):
        if self.source not in ("segmenter", "classifier", "manual"):
            raise ValueError(f"unknown source {self.source!r}")
        if self.source == "manual" and self.confidence != 1.0:
            raise ValueError("manual corrections carry confidence 1.0")


def _vertical_overlap(a: BBox, b: BBox) -> float:
    ov = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    return max(ov, 0.0) / min(a.height, b.height)


def _horizontal_overlap(a: BBox, b: BBox) -> float:
    ov = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    return max(ov, 0.0) / min(a.width, b.width)


def order_chars(chars: Sequence[CharResult]) -> list[list[CharResult]]:
    """Group into lines (vertical overlap >= 50% of the smaller height),
    lines top-down, characters left-to-right within a line."""
    remaining = sorted(chars, key=lambda c: (c.bbox.y_min, c.bbox.x_min))
    lines: list[list[CharResult]] = []
    for c in remaining:
        placed = False
        for line in lines:
            if any(_vertical_overlap(c.bbox, o.bbox) >= LINE_OVERLAP for o in line):
                line.append(c)
                placed = True
                break
        if not placed:
            lines.append([c])
    for line in lines:
        line.sort(key=lambda c: (c.bbox.x_min, c.bbox.y_min))
    lines.sort(key=lambda line: min(c.bbox.y_min for c in line))
    return lines


def assemble_region(seg: SegmentationOutput, predictions: Sequence[Prediction],
                    decisions: Mapping[int, str] | None = None
                    ) -> tuple[str, list[CharResult], list[int]]:
    """Merge resolved symbols with classified/corrected Chinese glyphs.

    `decisions` maps a Chinese-crop index to a manually chosen label. Returns
    (string, ordered chars, pending crop indices); pending glyphs render as
    the placeholder character.
    """
    if len(predictions) != len(seg.chinese_crops):
        raise ValueError(f"{len(seg.chinese_crops)} crops but {len(predictions)} predictions")
    decisions = decisions or {}
    chars: list[CharResult] = []
    pending: list[int] = []
    # char order must survive reassembly after corrections: keyed by position
    for box, char, conf in seg.symbols:
        chars.append(CharResult(bbox=box, char=char, confidence=conf, source="segmenter"))
    for i, (box, _crop) in enumerate(seg.chinese_crops):
        pred = predictions[i]
        if i in decisions:
            chars.append(CharResult(bbox=box, char=decisions[i], confidence=1.0, source="manual"))
        elif pred.accepted:
            chars.append(CharResult(bbox=box, char=pred.top1[0], confidence=pred.top1[1],
                                    source="classifier"))
        else:
            pending.append(i)
            chars.append(CharResult(bbox=box, char=PLACEHOLDER, confidence=pred.top1[1],
                                    source="classifier"))
    lines = order_chars(chars)
    ordered = [c for line in lines for c in line]
    return "".join(c.char for c in ordered), ordered, pending


def _normalize_key(text: str) -> str:
    return text.strip().strip(SEPARATORS)


def extract_fields(regions: Sequence[tuple[BBox, str]],
                   keywords: Mapping[str, Sequence[str]]) -> dict[str, str]:
    """Keyword-driven structuring.

    For each canonical key, the first rule yielding a non-empty value wins:
    remainder of the keyword's own string; nearest region to the right with
    >= 50% vertical overlap; nearest region below with >= 50% horizontal
    overlap. Unmatched keys are absent from the result.
    """
    out: dict[str, str] = {}
    for key, variants in keywords.items():
        candidates = sorted(set([key] + list(variants)), key=len, reverse=True)
        value = _find_value(regions, candidates)
        if value:
            out[key] = value
    return out


def _find_value(regions, variants) -> str | None:
    for box, text in regions:
        stripped = text.strip()
        for v in variants:
            matched = None
            if stripped.startswith(v):
                matched = stripped[len(v):]
            elif _normalize_key(stripped) == _normalize_key(v):
                matched = ""
            if matched is None:
                continue
            remainder = matched.lstrip(SEPARATORS).strip()
            if remainder:
                return remainder
            right = _nearest(regions, box, "right")
            if right:
                return right
            below = _nearest(regions, box, "below")
            if below:
                return below
    return None


def _nearest(regions, anchor: BBox, direction: str) -> str | None:
    best = None
    best_d = None
    for box, text in regions:
        if box == anchor or not text.strip():
            continue
        if direction == "right":
            d = box.x_min - anchor.x_max
            ok = d >= 0 and _vertical_overlap(anchor, box) >= ADJACENCY_OVERLAP
        else:
            d = box.y_min - anchor.y_max
            ok = d >= 0 and _horizontal_overlap(anchor, box) >= ADJACENCY_OVERLAP
        if ok and (best_d is None or d < best_d):
            best, best_d = text.strip(), d
    return best
