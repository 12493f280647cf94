"""Character segmentation inside a normalized region crop.

Three routes: the anchor-scan reference detector with two-step Chinese /
non-Chinese partitioning, and the two classical baselines (connected
components, projection profile).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import ndimage

from .detect import binarize_ink, eval_detection
from .geometry import AnchorSpec, BBox, ScoredBox, generate_anchors, lucnms
from .recognize import GlyphClassifier, classify, normalize_glyph, train_classifier

# category token for glyphs deferred to the fine-grained classifier; symbols
# carry their resolved single character as the label
CHINESE_CATEGORY = "CHINESE"

EIGHT_CONN = np.ones((3, 3), dtype=bool)

# anchor scheme for crops whose short edge is 64
CROP_ANCHORS = AnchorSpec(levels=(24.0, 40.0, 56.0, 68.0),
                          ratios=(0.45, 0.7, 1.0, 1.3), stride=4.0)


def _component_boxes(ink: np.ndarray) -> list[tuple[int, int, int, int]]:
    lab, n = ndimage.label(ink, structure=EIGHT_CONN)
    boxes = []
    for sl in ndimage.find_objects(lab):
        if sl is None:
            continue
        ys, xs = sl
        boxes.append((xs.start, ys.start, xs.stop, ys.stop))
    return boxes


def cc_segment(image: np.ndarray, dilate: int = 0) -> list[ScoredBox]:
    """Connected-component baseline; score is the component fill ratio.

    `dilate` joins broken strokes at the documented cost of fusing close
    neighbors.
    """
    ink = binarize_ink(image)
    if dilate > 0:
        ink = ndimage.binary_dilation(ink, iterations=dilate)
    if not ink.any():
        return []
    lab, n = ndimage.label(ink, structure=EIGHT_CONN)
    out = []
    for idx, sl in enumerate(ndimage.find_objects(lab), start=1):
        ys, xs = sl
        box = BBox(float(xs.start), float(ys.start), float(xs.stop), float(ys.stop))
        fill = float((lab[sl] == idx).sum()) / box.area
        out.append(ScoredBox(box=box, label=CHINESE_CATEGORY, score=min(fill, 1.0)))
    return out


def projection_segment(image: np.ndarray, min_gap: int = 2) -> list[ScoredBox]:
    """Vertical ink-projection baseline; cuts at zero-valleys wider than
    min_gap, boxes span the full crop height."""
    ink = binarize_ink(image)
    if not ink.any():
        return []
    h, w = ink.shape
    profile = ink.sum(axis=0)
    boxes = []
    x = 0
    while x < w:
        if profile[x] == 0:
            x += 1
            continue
        start = x
        gap = 0
        while x < w:
            if profile[x] > 0:
                gap = 0
            else:
                gap += 1
                if gap >= min_gap:
                    break
            x += 1
        end = x - gap + 1 if gap else x
        end = max(end, start + 1)
        box = BBox(float(start), 0.0, float(end), float(h))
        density = float(ink[:, start:end].sum()) / box.area
        boxes.append(ScoredBox(box=box, label=CHINESE_CATEGORY, score=min(density, 1.0)))
    return boxes


@dataclass
class CharDetectorModel:
    """Reference character detector: anchor scan + glyph-template scorer.

    The classifier spans the full taxonomy (Chinese + symbols); `scripts`
    maps each label to its script class for the two-step partition.
    """
    classifier: GlyphClassifier
    scripts: dict[str, str]
    anchor_spec: AnchorSpec = CROP_ANCHORS
    margin: float = 0.1         # symbol-vs-Chinese arbitration margin
    min_component: int = 6      # ink speckle floor inside a crop
    min_score: float = 0.05     # proposal floor before suppression
    drop_distance: float = 0.04  # template distance beyond which ink stays
                                 # unexplained rather than become a character
    group_cost: float = 0.5     # per-character parse cost, as a fraction of
                                 # the gain of a perfectly matched median-ink
                                 # character; favors fewer, whole characters

    def save(self, path: str | Path) -> None:
        payload = {
            "format_version": 1,
            "scripts": self.scripts,
            "anchor_spec": {"levels": list(self.anchor_spec.levels),
                            "ratios": list(self.anchor_spec.ratios),
                            "stride": self.anchor_spec.stride},
            "margin": self.margin,
            "min_component": self.min_component,
            "min_score": self.min_score,
            "drop_distance": self.drop_distance,
            "group_cost": self.group_cost,
            "classifier": {
                "labels": self.classifier.labels,
                "temperature": self.classifier.temperature,
                "mean_intra_dist": self.classifier.mean_intra_dist,
                "prototypes": self.classifier.prototypes.tolist(),
                "proto_label": self.classifier.proto_label.tolist(),
            },
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, ensure_ascii=False)

    @staticmethod
    def load(path: str | Path) -> "CharDetectorModel":
        with open(path, encoding="utf-8") as f:
            p = json.load(f)
        clf = GlyphClassifier(labels=list(p["classifier"]["labels"]),
                              prototypes=np.asarray(p["classifier"]["prototypes"]),
                              proto_label=np.asarray(p["classifier"]["proto_label"],
                                                     dtype=np.int64),
                              temperature=float(p["classifier"]["temperature"]),
                              mean_intra_dist=float(p["classifier"]["mean_intra_dist"]))
        spec = AnchorSpec(levels=tuple(p["anchor_spec"]["levels"]),
                          ratios=tuple(p["anchor_spec"]["ratios"]),
                          stride=float(p["anchor_spec"]["stride"]))
        return CharDetectorModel(classifier=clf, scripts=dict(p["scripts"]),
                                 anchor_spec=spec, margin=float(p["margin"]),
                                 min_component=int(p["min_component"]),
                                 min_score=float(p["min_score"]),
                                 drop_distance=float(p["drop_distance"]),
                                 group_cost=float(p["group_cost"]))


def train_char_detector(samples, scripts: dict[str, str],
                        prototypes_per_label: int = 3,
                        **kwargs) -> CharDetectorModel:
    """Fit the full-taxonomy template scorer from labeled glyph images."""
    clf = train_classifier(samples, prototypes_per_label=prototypes_per_label)
    return CharDetectorModel(classifier=clf, scripts=scripts, **kwargs)


@dataclass(frozen=True)
class _Candidate:
    box: BBox
    comps: frozenset[int]   # ink component indices behind the box
    label: str              # category label: CHINESE or the resolved symbol
    conf: float
    d1: float               # squared distance to the nearest prototype
    quality: float          # template match quality in (0, 1]
    score: float            # conf * quality


def _candidate_sets(ink: np.ndarray, comps: np.ndarray, spec: AnchorSpec) -> list[np.ndarray]:
    """Component groupings proposed by the anchor scan: every window refines
    to the set of ink components it fully contains (partially covered
    components are treated as background belonging to a neighbor). Singleton
    groups are always included so each component has an interpretation."""
    h, w = ink.shape
    anchors = generate_anchors(spec, w, h)
    win = np.array([[max(a.x_min, 0), max(a.y_min, 0), min(a.x_max, w), min(a.y_max, h)]
                    for a in anchors])
    win = win[(win[:, 2] - win[:, 0] > 1) & (win[:, 3] - win[:, 1] > 1)]
    contained = ((win[:, None, 0] <= comps[None, :, 0])
                 & (win[:, None, 1] <= comps[None, :, 1])
                 & (win[:, None, 2] >= comps[None, :, 2])
                 & (win[:, None, 3] >= comps[None, :, 3]))
    singles = np.eye(len(comps), dtype=bool)
    rows = np.concatenate([contained[contained.any(axis=1)], singles], axis=0)
    return [np.nonzero(r)[0] for r in np.unique(rows, axis=0)]


def _analyze(image: np.ndarray, model: CharDetectorModel
             ) -> tuple[list[_Candidate], np.ndarray, np.ndarray]:
    """Classify every proposed component grouping of a line crop.

    Returns (candidates, component boxes (n,4), component ink pixel counts).
    """
    if model is None:
        raise ValueError("character detector model not loaded")
    ink = binarize_ink(image, min_component=model.min_component)
    if not ink.any():
        return [], np.empty((0, 4), dtype=np.int64), np.empty(0, dtype=np.int64)
    lab, n = ndimage.label(ink, structure=EIGHT_CONN)
    comp_boxes = np.array(_component_boxes(ink), dtype=np.int64)
    counts = np.asarray(ndimage.sum_labels(ink, lab, index=range(1, n + 1)), dtype=np.int64)
    intra = max(model.classifier.mean_intra_dist, 1e-9)
    cands = []
    for idx in _candidate_sets(ink, comp_boxes, model.anchor_spec):
        x0, y0 = comp_boxes[idx, 0].min(), comp_boxes[idx, 1].min()
        x1, y1 = comp_boxes[idx, 2].max(), comp_boxes[idx, 3].max()
        # mask out ink of components outside the group before matching
        patch = ink[y0:y1, x0:x1] & np.isin(lab[y0:y1, x0:x1], idx + 1)
        pred = classify(model.classifier, normalize_glyph(patch), top_k=12)
        label, conf = pred.top1
        quality = float(np.exp(-pred.distances[0] / (2.0 * intra)))
        best_cn = 0.0
        for (l, c) in pred.candidates:
            if model.scripts.get(l) == "chinese":
                best_cn = c
                break
        if model.scripts.get(label) != "chinese" and (conf - best_cn) >= model.margin:
            out_label = label
        else:
            out_label = CHINESE_CATEGORY
        cands.append(_Candidate(box=BBox(float(x0), float(y0), float(x1), float(y1)),
                                comps=frozenset(idx.tolist()), label=out_label,
                                conf=conf, d1=float(pred.distances[0]), quality=quality,
                                score=min(conf * quality, 1.0)))
    return cands, comp_boxes, counts


def propose_chars(image: np.ndarray, model: CharDetectorModel) -> list[ScoredBox]:
    """Unsuppressed character candidates with category labels and confidences."""
    cands, _, _ = _analyze(image, model)
    return [ScoredBox(box=c.box, label=c.label, score=c.score)
            for c in cands if c.score >= model.min_score]


def _best_parse(cands: list[_Candidate], comp_boxes: np.ndarray,
                counts: np.ndarray, drop_distance: float,
                group_cost: float) -> list[_Candidate]:
    """Pick the character interpretation of a single text line.

    Components are ordered along the line; candidates whose component groups
    form contiguous runs compete to cover every component exactly once. A
    group explains its ink at a rate of (drop_distance - d1) per ink pixel
    and every group pays a flat cost, so a whole glyph beats the same ink
    explained as stroke fragments: an isolated fragment may resemble some
    simple character almost perfectly, but reading it separately pays for an
    extra character. A group whose template distance exceeds drop_distance
    is written off as an unexplained mark and omitted from the result.
    """
    n = len(counts)
    if n == 0:
        return []
    cost = group_cost * drop_distance * float(np.median(counts))
    order = sorted(range(n), key=lambda i: (comp_boxes[i, 0], comp_boxes[i, 1]))
    pos = {c: i for i, c in enumerate(order)}
    by_start: dict[int, list[tuple[int, _Candidate]]] = {}
    for c in cands:
        ps = sorted(pos[k] for k in c.comps)
        if ps[-1] - ps[0] + 1 != len(ps):
            continue  # group straddles a foreign component: not a run
        by_start.setdefault(ps[0], []).append((ps[-1], c))
    # right-to-left DP over run starts; total gain, then fewer emitted
    # groups as the deterministic tie break
    best: list[tuple[float, int, list[_Candidate]]] = [(0.0, 0, [])] * (n + 1)
    for i in range(n - 1, -1, -1):
        choices = []
        for j, c in by_start.get(i, ()):
            w = float(sum(counts[order[k]] for k in range(i, j + 1)))
            emit = c.d1 <= drop_distance
            gain = (w * (drop_distance - c.d1) if emit else 0.0) - cost
            tot, groups, tail = best[j + 1]
            choices.append((gain + tot, groups + (1 if emit else 0),
                            ([c] + tail) if emit else tail))
        best[i] = min(choices, key=lambda t: (-t[0], t[1]))
    return best[0][2]


@dataclass(frozen=True)
class SegmentationOutput:
    chinese_crops: tuple[tuple[BBox, np.ndarray], ...]     # (box, 32x32 input)
    symbols: tuple[tuple[BBox, str, float], ...]           # (box, char, confidence)

    def all_boxes(self) -> list[BBox]:
        return [b for b, _ in self.chinese_crops] + [b for b, _, _ in self.symbols]


def segment_region(image: np.ndarray, model: CharDetectorModel,
                   lucnms_threshold: float = 0.3) -> SegmentationOutput:
    """propose -> line parse -> location-unique suppression -> partition."""
    cands, comp_boxes, counts = _analyze(image, model)
    chosen = _best_parse(cands, comp_boxes, counts,
                         drop_distance=model.drop_distance,
                         group_cost=model.group_cost)
    kept = lucnms([ScoredBox(box=c.box, label=c.label, score=c.score) for c in chosen],
                  lucnms_threshold)
    by_key = {(c.box, c.label): c for c in chosen}
    kept = sorted(kept, key=lambda s: (s.box.x_min, s.box.y_min))  # reading order
    ink = binarize_ink(image, min_component=model.min_component)
    lab, _ = ndimage.label(ink, structure=EIGHT_CONN)
    chinese = []
    symbols = []
    h, w = image.shape
    for s in kept:
        if s.label == CHINESE_CATEGORY:
            cand = by_key[(s.box, s.label)]
            x0 = max(int(s.box.x_min) - 2, 0)
            y0 = max(int(s.box.y_min) - 2, 0)
            x1 = min(int(s.box.x_max) + 2, w)
            y1 = min(int(s.box.y_max) + 2, h)
            keep = np.asarray(sorted(cand.comps), dtype=np.int64) + 1
            patch = ink[y0:y1, x0:x1] & np.isin(lab[y0:y1, x0:x1], keep)
            chinese.append((s.box, normalize_glyph(patch)))
        else:
            symbols.append((s.box, s.label, s.score))
    return SegmentationOutput(chinese_crops=tuple(chinese), symbols=tuple(symbols))


def candidates_from_json(data: dict) -> list[ScoredBox]:
    """Decode externally produced character candidates.

    Exchange schema: {"region_id": ..., "boxes": [{"bbox": [x0,y0,x1,y1],
    "category": str, "score": float}, ...]} — lets a stronger detector plug
    into the same suppression and partitioning path."""
    return [ScoredBox(box=BBox(*b["bbox"]), label=str(b["category"]),
                      score=float(b["score"]))
            for b in data["boxes"]]


def eval_segmentation(pred: Sequence[BBox], truth: Sequence[BBox],
                      iou_threshold: float = 0.5) -> tuple[float, float, float]:
    """Greedy IoU matching, same protocol as region detection."""
    return eval_detection(pred, truth, iou_threshold)
