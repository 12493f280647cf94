"""Text-region detection: probability maps, pixel aggregation, dice losses,
region cropping and detection P/R/F1."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from PIL import Image
from scipy import ndimage

from .geometry import BBox, iou

DICE_EPS = 1e-6
FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass
class LossReport:
    l_tex: float
    l_ker: float
    l_agg: float = 0.0
    l_dis: float = 0.0
    alpha: float = 0.5
    beta: float = 0.25

    @property
    def l_total(self) -> float:
        return self.l_tex + self.alpha * self.l_ker + self.beta * (self.l_agg + self.l_dis)


@dataclass(frozen=True)
class TextRegion:
    id: int
    bbox: BBox
    mask: np.ndarray | None  # pixel set within the full map, optional
    score: float = 1.0


def dice_loss(p: np.ndarray, g: np.ndarray) -> float:
    """1 - Dice overlap between a probability map and a binary mask."""
    p = np.asarray(p, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    num = 2.0 * float((p * g).sum())
    den = float((p * p).sum() + (g * g).sum()) + DICE_EPS
    return 1.0 - num / den


def combined_loss(l_tex: float, l_ker: float, l_agg: float = 0.0, l_dis: float = 0.0,
                  alpha: float = 0.5, beta: float = 0.25) -> LossReport:
    """Weighted sum l_tex + alpha*l_ker + beta*(l_agg + l_dis)."""
    vals = dict(l_tex=l_tex, l_ker=l_ker, l_agg=l_agg, l_dis=l_dis, alpha=alpha, beta=beta)
    for name, v in vals.items():
        if v < 0:
            raise ValueError(f"{name} must be >= 0, got {v}")
    return LossReport(**vals)


def _otsu(values: np.ndarray) -> float:
    hist, edges = np.histogram(values, bins=256, range=(0, 255))
    p = hist.astype(np.float64) / max(hist.sum(), 1)
    centers = (edges[:-1] + edges[1:]) / 2
    w0 = np.cumsum(p)
    mu = np.cumsum(p * centers)
    mu_t = mu[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma_b = (mu_t * w0 - mu) ** 2 / (w0 * (1 - w0))
    sigma_b[~np.isfinite(sigma_b)] = 0
    return float(centers[int(np.argmax(sigma_b))])


def binarize_ink(image: np.ndarray, min_component: int = 4) -> np.ndarray:
    """Dark-ink mask via Otsu threshold; speckles below min_component removed."""
    img = np.asarray(image, dtype=np.float64)
    if img.std() < 4.0:  # effectively blank page
        return np.zeros(img.shape, dtype=bool)
    ink = img < _otsu(img)
    if min_component > 1 and ink.any():
        lab, n = ndimage.label(ink, structure=np.ones((3, 3), dtype=bool))
        sizes = ndimage.sum_labels(np.ones_like(lab), lab, index=np.arange(1, n + 1))
        keep = np.zeros(n + 1, dtype=bool)
        keep[1:] = sizes >= min_component
        ink = keep[lab]
    return ink


def detect_maps(image: np.ndarray, close_width: int = 15, close_height: int = 3,
                shrink: float = 0.7) -> tuple[np.ndarray, np.ndarray]:
    """Classical baseline for the detector interface.

    Text map: ink binarization + horizontal morphological closing. Kernel map:
    per-component distance-transform shrink to `shrink` of the local extent.
    """
    if image.size == 0:
        raise ValueError("empty image")
    ink = binarize_ink(image)
    if not ink.any():
        z = np.zeros(image.shape, dtype=np.float64)
        return z, z.copy()
    structure = np.ones((close_height, close_width), dtype=bool)
    text = ndimage.binary_closing(ink, structure=structure)
    # closing can eat thin strokes at borders; keep original ink too
    text |= ink

    kernel = np.zeros_like(text)
    lab, n = ndimage.label(text, structure=np.ones((3, 3), dtype=bool))
    dist = ndimage.distance_transform_edt(text)
    for idx in range(1, n + 1):
        comp = lab == idx
        dmax = dist[comp].max()
        shrunk = comp & (dist >= (1.0 - shrink) * dmax)
        # the shrink can break at thin necks; keep the largest piece so each
        # text blob seeds exactly one region
        pieces, np_ = ndimage.label(shrunk, structure=np.ones((3, 3), dtype=bool))
        if np_ > 1:
            sizes = ndimage.sum_labels(np.ones_like(pieces), pieces,
                                       index=np.arange(1, np_ + 1))
            shrunk = pieces == (1 + int(np.argmax(sizes)))
        kernel |= shrunk
    return text.astype(np.float64), kernel.astype(np.float64)


def aggregate_pixels(text: np.ndarray, kernel: np.ndarray,
                     prob: np.ndarray | None = None) -> list[TextRegion]:
    """Assign text pixels to kernel instances by multi-source BFS.

    Kernels are 4-connected components of the kernel mask (intersected with
    text). Equal-distance ties go to the lower kernel id; text pixels not
    reachable from any kernel are discarded as noise.
    """
    text = np.asarray(text, dtype=bool)
    kernel = np.asarray(kernel, dtype=bool) & text
    if text.shape != kernel.shape:
        raise ValueError("mask dimensions differ")
    lab, n = ndimage.label(kernel, structure=FOUR_CONN)
    if n == 0:
        return []
    h, w = text.shape
    owner = np.zeros((h, w), dtype=np.int32)
    owner[kernel] = lab[kernel]
    seeds = np.argwhere(kernel)
    # FIFO BFS seeded in kernel-id order => ties resolve to the lower id
    order = np.lexsort((seeds[:, 1], seeds[:, 0], lab[seeds[:, 0], seeds[:, 1]]))
    q = deque((int(y), int(x)) for y, x in seeds[order])
    while q:
        y, x = q.popleft()
        o = owner[y, x]
        for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
            if 0 <= ny < h and 0 <= nx < w and text[ny, nx] and owner[ny, nx] == 0:
                owner[ny, nx] = o
                q.append((ny, nx))

    regions: list[TextRegion] = []
    for idx in range(1, n + 1):
        mask = owner == idx
        ys, xs = np.nonzero(mask)
        bbox = BBox(float(xs.min()), float(ys.min()), float(xs.max()) + 1, float(ys.max()) + 1)
        score = float(prob[mask].mean()) if prob is not None else 1.0
        regions.append(TextRegion(id=idx, bbox=bbox, mask=mask, score=score))
    return regions


def match_boxes(pred: Sequence[BBox], truth: Sequence[BBox],
                iou_threshold: float = 0.5) -> list[tuple[int, int]]:
    """One-to-one greedy matching by descending IoU; pairs below threshold
    are not matched."""
    pairs = [(iou(p, t), i, j) for i, p in enumerate(pred) for j, t in enumerate(truth)]
    pairs.sort(key=lambda x: (-x[0], x[1], x[2]))
    used_p: set[int] = set()
    used_t: set[int] = set()
    matches = []
    for v, i, j in pairs:
        if v < iou_threshold:
            break
        if i in used_p or j in used_t:
            continue
        used_p.add(i)
        used_t.add(j)
        matches.append((i, j))
    return matches


def eval_detection(pred: Sequence[BBox], truth: Sequence[BBox],
                   iou_threshold: float = 0.5) -> tuple[float, float, float]:
    """Detection precision/recall/F1 under greedy one-to-one IoU matching."""
    tp = len(match_boxes(pred, truth, iou_threshold))
    precision = tp / len(pred) if pred else 1.0
    recall = tp / len(truth) if truth else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class RegionCrop:
    image: np.ndarray
    region: TextRegion
    scale: float
    offset: tuple[float, float]  # (x, y) of the region origin in the source image

    def to_image_coords(self, box: BBox) -> BBox:
        ox, oy = self.offset
        return BBox(box.x_min / self.scale + ox, box.y_min / self.scale + oy,
                    box.x_max / self.scale + ox, box.y_max / self.scale + oy)


def crop_regions(image: np.ndarray, regions: Sequence[TextRegion],
                 short_edge: int = 64) -> list[RegionCrop]:
    """Crop each region and rescale so its short edge is exactly `short_edge`."""
    h, w = image.shape
    crops = []
    for region in regions:
        b = region.bbox
        x0, y0 = int(np.floor(b.x_min)), int(np.floor(b.y_min))
        x1, y1 = int(np.ceil(b.x_max)), int(np.ceil(b.y_max))
        if x0 < 0 or y0 < 0 or x1 > w or y1 > h:
            raise ValueError(f"region {region.id} outside image bounds")
        patch = image[y0:y1, x0:x1]
        ph, pw = patch.shape
        scale = short_edge / min(ph, pw)
        out_w, out_h = max(1, round(pw * scale)), max(1, round(ph * scale))
        if ph <= pw:
            out_h = short_edge
        else:
            out_w = short_edge
        resized = np.asarray(Image.fromarray(patch).resize((out_w, out_h), Image.BILINEAR))
        crops.append(RegionCrop(image=resized, region=region, scale=scale,
                                offset=(float(x0), float(y0))))
    return crops
