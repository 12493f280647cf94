"""Glyph classification with confidence and the precision-first threshold.

The classifier is a per-label prototype (nearest-centroid) model over
normalized 32x32 ink maps with a temperature-scaled softmax confidence. It
sits behind the same interface a neural classifier would.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image
from scipy import ndimage

from .detect import binarize_ink

INPUT_SIZE = 32
PAD = 2
SMOOTH_SIGMA = 1.3
MODEL_FORMAT_VERSION = 1
DEFAULT_TEMPERATURE = 0.004


def normalize_glyph(image: np.ndarray) -> np.ndarray:
    """Canonical classifier input: tight ink crop scaled into a 32x32 canvas
    preserving aspect ratio with a fixed relative margin, ink-positive
    intensities in [0,1].

    The margin is proportional (not a fixed pixel pad) so glyphs rendered at
    different resolutions normalize to the same representation.
    """
    img = np.asarray(image)
    if img.ndim != 2 or img.size == 0:
        raise ValueError("expected a non-empty grayscale image")
    # boolean input is taken as an ink mask directly; thresholding tiny
    # nearly-all-ink patches in isolation is unstable, so callers that
    # already binarized a full line should pass the mask patch
    if img.dtype == bool:
        ink = img
    else:
        ink = binarize_ink(img.astype(np.float64), min_component=1)
    if not ink.any():
        return np.zeros((INPUT_SIZE, INPUT_SIZE))
    ys, xs = np.nonzero(ink)
    ink = ink[int(ys.min()):int(ys.max()) + 1, int(xs.min()):int(xs.max()) + 1]
    h, w = ink.shape
    scale = (INPUT_SIZE - 2 * PAD) / max(h, w)
    out_h, out_w = max(1, round(h * scale)), max(1, round(w * scale))
    # work on the binary ink coverage, not raw gray: ink darkness, background
    # shade and source-resolution antialiasing all cancel out here
    glyph = np.asarray(
        Image.fromarray(ink.astype(np.float32), mode="F").resize((out_w, out_h),
                                                                 Image.BILINEAR),
        dtype=np.float64)
    canvas = np.zeros((INPUT_SIZE, INPUT_SIZE))
    oy = (INPUT_SIZE - out_h) // 2
    ox = (INPUT_SIZE - out_w) // 2
    canvas[oy:oy + out_h, ox:ox + out_w] = glyph
    # soften strokes so the prototype distance tolerates 1-2 px misalignment
    # and stroke-weight differences between rendering paths
    canvas = ndimage.gaussian_filter(canvas, sigma=SMOOTH_SIGMA)
    peak = canvas.max()
    if peak > 1e-9:
        canvas /= peak
    return canvas


@dataclass
class GlyphClassifier:
    """Nearest-prototype model; a label may own several prototypes so that
    style variants (thin/thick renderings) keep crisp templates instead of
    being averaged into a blur."""
    labels: list[str]
    prototypes: np.ndarray          # (n_prototypes, 32*32)
    proto_label: np.ndarray         # (n_prototypes,) index into labels
    temperature: float = DEFAULT_TEMPERATURE
    mean_intra_dist: float = 0.0    # mean squared distance of training samples
                                    # to their nearest own prototype

    def __post_init__(self):
        if len(self.labels) == 0:
            raise ValueError("empty label space")
        n = self.prototypes.shape[0]
        if self.prototypes.shape != (n, INPUT_SIZE * INPUT_SIZE) or n == 0:
            raise ValueError("prototype matrix shape mismatch")
        if self.proto_label.shape != (n,):
            raise ValueError("prototype ownership shape mismatch")
        if not np.isfinite(self.prototypes).all():
            raise ValueError("non-finite prototypes")
        covered = set(self.proto_label.tolist())
        if covered != set(range(len(self.labels))):
            raise ValueError("every label needs at least one prototype")

    def save(self, path: str | Path) -> None:
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "labels": self.labels,
            "temperature": self.temperature,
            "mean_intra_dist": self.mean_intra_dist,
            "prototypes": self.prototypes.tolist(),
            "proto_label": self.proto_label.tolist(),
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, ensure_ascii=False)

    @staticmethod
    def load(path: str | Path) -> "GlyphClassifier":
        with open(path, encoding="utf-8") as f:
            payload = json.load(f)
        if payload.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format: {payload.get('format_version')}")
        return GlyphClassifier(
            labels=list(payload["labels"]),
            prototypes=np.asarray(payload["prototypes"], dtype=np.float64),
            proto_label=np.asarray(payload["proto_label"], dtype=np.int64),
            temperature=float(payload["temperature"]),
            mean_intra_dist=float(payload["mean_intra_dist"]),
        )


@dataclass(frozen=True)
class Prediction:
    candidates: tuple[tuple[str, float], ...]  # descending confidence
    distances: tuple[float, ...] = ()          # squared distances, same order
    accepted: bool | None = None
    threshold: float | None = None

    @property
    def top1(self) -> tuple[str, float]:
        return self.candidates[0]


def _cluster(vectors: np.ndarray, k: int, iterations: int = 12) -> np.ndarray:
    """Deterministic small-k Lloyd clustering; returns the centroids."""
    k = min(k, len(vectors))
    # spread initial centers across the sample order
    centers = vectors[np.linspace(0, len(vectors) - 1, k).round().astype(int)].copy()
    for _ in range(iterations):
        d = ((vectors[:, None, :] - centers[None, :, :]) ** 2).mean(axis=2)
        assign = d.argmin(axis=1)
        for j in range(k):
            members = vectors[assign == j]
            if len(members):
                centers[j] = members.mean(axis=0)
    return centers


def train_classifier(samples: Iterable[tuple[np.ndarray, str]],
                     temperature: float = DEFAULT_TEMPERATURE,
                     normalized: bool = False,
                     prototypes_per_label: int = 3) -> GlyphClassifier:
    """Clustered per-label prototypes over normalized inputs.

    `samples` yields (image, label); set normalized=True when images are
    already 32x32 canonical inputs.
    """
    by_label: dict[str, list[np.ndarray]] = {}
    for image, label in samples:
        if not label:
            raise ValueError("empty label")
        x = image if normalized else normalize_glyph(image)
        by_label.setdefault(label, []).append(np.asarray(x, dtype=np.float64).ravel())
    if len(by_label) < 2:
        raise ValueError("need at least 2 labels to train")
    if prototypes_per_label < 1:
        raise ValueError("prototypes_per_label must be >= 1")
    labels = sorted(by_label)
    protos = []
    owner = []
    intra = []
    for i, l in enumerate(labels):
        vectors = np.stack(by_label[l])
        centers = _cluster(vectors, prototypes_per_label)
        protos.append(centers)
        owner.extend([i] * len(centers))
        d = ((vectors[:, None, :] - centers[None, :, :]) ** 2).mean(axis=2)
        intra.extend(d.min(axis=1).tolist())
    return GlyphClassifier(labels=labels, prototypes=np.concatenate(protos),
                           proto_label=np.asarray(owner, dtype=np.int64),
                           temperature=temperature,
                           mean_intra_dist=float(np.mean(intra)))


def classify(model: GlyphClassifier, image: np.ndarray, top_k: int = 5) -> Prediction:
    """Softmax over negative mean-squared distances to each label's nearest
    prototype."""
    x = np.asarray(image, dtype=np.float64)
    if x.shape != (INPUT_SIZE, INPUT_SIZE):
        raise ValueError(f"expected {INPUT_SIZE}x{INPUT_SIZE} normalized input, got {x.shape}")
    dp = np.mean((model.prototypes - x.ravel()) ** 2, axis=1)
    d = np.full(len(model.labels), np.inf)
    np.minimum.at(d, model.proto_label, dp)
    logits = -d / model.temperature
    logits -= logits.max()
    conf = np.exp(logits)
    conf /= conf.sum()
    # stable ordering: confidence desc, then label
    order = sorted(range(len(model.labels)), key=lambda i: (-conf[i], model.labels[i]))
    top = order[:top_k]
    return Prediction(
        candidates=tuple((model.labels[i], float(conf[i])) for i in top),
        distances=tuple(float(d[i]) for i in top),
    )


def classify_raw(model: GlyphClassifier, image: np.ndarray, top_k: int = 5) -> Prediction:
    return classify(model, normalize_glyph(image), top_k=top_k)


def apply_threshold(prediction: Prediction, tau: float) -> Prediction:
    """Accept iff top-1 confidence >= tau; rejected items go to the queue."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau outside [0,1]: {tau}")
    accepted = prediction.top1[1] >= tau
    return Prediction(candidates=prediction.candidates, distances=prediction.distances,
                      accepted=accepted, threshold=tau)


@dataclass(frozen=True)
class SweepPoint:
    threshold: float
    recall: float
    precision: float
    accepted_count: int
    error_count: int


@dataclass(frozen=True)
class SweepCurve:
    points: tuple[SweepPoint, ...]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write("threshold,recall,precision,accepted,errors\n")
            for p in self.points:
                f.write(f"{p.threshold},{p.recall},{p.precision},"
                        f"{p.accepted_count},{p.error_count}\n")


def sweep_thresholds(model: GlyphClassifier,
                     samples: Sequence[tuple[np.ndarray, str]],
                     thresholds: Sequence[float],
                     normalized: bool = False) -> SweepCurve:
    """Recall/precision/error-count tradeoff across confidence thresholds.

    recall = accepted-and-correct / total; precision = correct / accepted
    (1.0 for an empty accepted set, by the precision-first convention).
    """
    if not samples:
        raise ValueError("empty dataset")
    if list(thresholds) != sorted(thresholds) or any(not 0 <= t <= 1 for t in thresholds):
        raise ValueError("thresholds must be ascending in [0,1]")
    results = []
    for image, label in samples:
        pred = classify(model, image if normalized else normalize_glyph(image), top_k=1)
        results.append((pred.top1[1], pred.top1[0] == label))
    total = len(results)
    points = []
    for tau in thresholds:
        accepted = [(c, ok) for c, ok in results if c >= tau]
        correct = sum(1 for _, ok in accepted if ok)
        errors = len(accepted) - correct
        recall = correct / total
        precision = correct / len(accepted) if accepted else 1.0
        points.append(SweepPoint(threshold=float(tau), recall=recall, precision=precision,
                                 accepted_count=len(accepted), error_count=errors))
    return SweepCurve(points=tuple(points))
