"""Glyph rendering and labeled glyph dataset generation."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from ..detect import TextRegion, binarize_ink, crop_regions
from ..geometry import BBox
from .atlas import GlyphAtlas
from .space import ConstructionSpace, SpacePoint

GLYPH_CANVAS = 40  # side of a rendered single-glyph image


class LayoutOverflowError(ValueError):
    """Raised when rendered text does not fit its canvas."""


def scale_mask(mask: np.ndarray, size: int, style: int) -> np.ndarray:
    """Resize a boolean glyph mask to `size` px and apply the style axis
    (-1 thin / 0 plain / +1 thick)."""
    img = Image.fromarray(mask.astype(np.uint8) * 255)
    coverage = np.asarray(img.resize((size, size), Image.BILINEAR), dtype=np.float64) / 255.0
    # stroke weight via the coverage threshold: lighter cut = thicker strokes
    # the thin cut stays low enough that no glyph stroke breaks apart at any
    # supported size; legibility outranks stylistic range
    threshold = {-1: 0.5, 0: 0.42, 1: 0.28}.get(style, 0.42)
    resized = coverage > threshold
    if not resized.any():
        resized = coverage > 0.42
    return resized


def stamp(canvas: np.ndarray, mask: np.ndarray, x: int, y: int, ink: float) -> tuple[int, int, int, int] | None:
    """Write a glyph mask onto a float canvas at (x, y); returns the tight
    ink box (x0, y0, x1, y1) in canvas coordinates or None if fully clipped."""
    h, w = canvas.shape
    mh, mw = mask.shape
    x0, y0 = max(x, 0), max(y, 0)
    x1, y1 = min(x + mw, w), min(y + mh, h)
    if x0 >= x1 or y0 >= y1:
        return None
    sub = mask[y0 - y:y1 - y, x0 - x:x1 - x]
    if not sub.any():
        return None
    region = canvas[y0:y1, x0:x1]
    region[sub] = ink
    ys, xs = np.nonzero(sub)
    return (x0 + int(xs.min()), y0 + int(ys.min()),
            x0 + int(xs.max()) + 1, y0 + int(ys.max()) + 1)


def make_background(shape: tuple[int, int], point: SpacePoint,
                    rng: np.random.Generator) -> np.ndarray:
    canvas = np.full(shape, point.background, dtype=np.float64)
    if point.texture > 0:
        canvas += rng.normal(0.0, point.texture, size=shape)
    return canvas


def finish_image(canvas: np.ndarray, point: SpacePoint) -> np.ndarray:
    """Blur + contrast post-processing shared by glyph and ticket rendering."""
    img = canvas
    if point.blur > 0:
        img = ndimage.gaussian_filter(img, sigma=point.blur)
    if point.contrast != 1.0:
        img = (img - 128.0) * point.contrast + 128.0
    return np.clip(img, 0, 255).astype(np.uint8)


def render_glyph(atlas: GlyphAtlas, label: str, point: SpacePoint, seed: int,
                 canvas_size: int = GLYPH_CANVAS) -> np.ndarray:
    """One glyph composited over the sampled background; deterministic per seed."""
    if label not in atlas.glyphs:
        raise KeyError(f"unknown glyph label {label!r}")
    rng = np.random.default_rng([seed, 0x617])
    size = min(point.size, canvas_size - 2)
    mask = scale_mask(atlas.glyphs[label], size, point.style)
    canvas = make_background((canvas_size, canvas_size), point, rng)
    off = (canvas_size - size) // 2
    stamp(canvas, mask, off, off, point.ink)
    return finish_image(canvas, point)


@dataclass(frozen=True)
class GlyphSample:
    image: np.ndarray
    label: str
    split: str  # train | val


@dataclass(frozen=True)
class GlyphDataset:
    samples: tuple[GlyphSample, ...]

    @property
    def labels(self) -> list[str]:
        return sorted({s.label for s in self.samples})

    def subset(self, split: str) -> list[GlyphSample]:
        return [s for s in self.samples if s.split == split]

    def save(self, out_dir: str | Path) -> None:
        root = Path(out_dir) / "glyphs"
        counters: dict[str, int] = {}
        index = []
        for s in self.samples:
            n = counters.get(s.label, 0)
            counters[s.label] = n + 1
            d = root / s.label
            d.mkdir(parents=True, exist_ok=True)
            Image.fromarray(s.image).save(d / f"{n}.png")
            index.append({"label": s.label, "n": n, "split": s.split})
        with open(root / "index.json", "w", encoding="utf-8") as f:
            json.dump(index, f, ensure_ascii=False)

    @staticmethod
    def load(out_dir: str | Path) -> "GlyphDataset":
        root = Path(out_dir) / "glyphs"
        with open(root / "index.json", encoding="utf-8") as f:
            index = json.load(f)
        samples = []
        for rec in index:
            img = np.asarray(Image.open(root / rec["label"] / f"{rec['n']}.png").convert("L"))
            samples.append(GlyphSample(image=img, label=rec["label"], split=rec["split"]))
        return GlyphDataset(samples=tuple(samples))


def render_string(canvas: np.ndarray, atlas: GlyphAtlas, text: str, x: int, y: int,
                  point: SpacePoint) -> list[tuple[BBox, str]]:
    """Stamp a string left-to-right; returns tight per-character boxes."""
    chars: list[tuple[BBox, str]] = []
    cursor = x
    for ch in text:
        mask = scale_mask(atlas.glyphs[ch], point.size, point.style)
        cols = np.nonzero(mask.any(axis=0))[0]
        mask = mask[:, cols.min():cols.max() + 1]
        tight = stamp(canvas, mask, cursor, y, point.ink)
        if tight is None:
            raise LayoutOverflowError(f"character {ch!r} fell outside the canvas")
        chars.append((BBox(*map(float, tight)), ch))
        cursor += mask.shape[1] + point.spacing
    return chars


def generate_line_dataset(atlas: GlyphAtlas, space: ConstructionSpace,
                          per_label_count: int, seed: int,
                          val_fraction: float = 0.2,
                          short_edge: int = 64) -> GlyphDataset:
    """Character samples harvested from rendered context lines.

    Each sample is the boolean ink mask of one character taken from a short
    line that went through the same crop-and-rescale path segmentation uses
    at run time, so templates trained on it see run-time stroke weight,
    interpolation halo and resolution instead of pristine single-glyph
    renders. Chinese characters and line-height marks get Chinese context,
    everything else digit context, mirroring where they occur on tickets.
    """
    if per_label_count < 1:
        raise ValueError("per_label_count must be >= 1")
    n_val = int(per_label_count * val_fraction)
    cjk = atlas.chinese_labels
    digits = [c for c in "0123456789" if c in atlas.glyphs] or cjk
    eight = np.ones((3, 3), dtype=bool)
    samples = []
    for li, label in enumerate(atlas.labels):
        pool = cjk if (atlas.scripts[label] == "chinese" or label in ":;") else digits
        for i in range(per_label_count):
            rng = np.random.default_rng([seed, 0x11E5, li, i])
            point = space.sample(rng)
            text = pool[int(rng.integers(len(pool)))] + label + pool[int(rng.integers(len(pool)))]
            w = len(text) * 2 * (point.size + point.spacing) + 40
            canvas = make_background((point.size + 40, w), point, rng)
            chars = render_string(canvas, atlas, text, 20, 20, point)
            img = finish_image(canvas, point)
            x0 = min(b.x_min for b, _ in chars) - 2
            y0 = min(b.y_min for b, _ in chars) - 2
            x1 = max(b.x_max for b, _ in chars) + 2
            y1 = max(b.y_max for b, _ in chars) + 2
            region = TextRegion(id="line", bbox=BBox(x0, y0, x1, y1), mask=None, score=1.0)
            crop = crop_regions(img, [region], short_edge=short_edge)[0]
            tb = chars[1][0]
            cx0 = (tb.x_min - crop.offset[0]) * crop.scale
            cy0 = (tb.y_min - crop.offset[1]) * crop.scale
            cx1 = (tb.x_max - crop.offset[0]) * crop.scale
            cy1 = (tb.y_max - crop.offset[1]) * crop.scale
            ink = binarize_ink(crop.image, min_component=6)
            lab, n = ndimage.label(ink, structure=eight)
            keep = []
            for k, sl in enumerate(ndimage.find_objects(lab), start=1):
                if sl is None:
                    continue
                ys, xs = sl
                ccx, ccy = (xs.start + xs.stop) / 2, (ys.start + ys.stop) / 2
                if cx0 - 1 <= ccx <= cx1 + 1 and cy0 - 1 <= ccy <= cy1 + 1:
                    keep.append(k)
            if not keep:
                continue
            mask = np.isin(lab, keep)
            ys, xs = np.nonzero(mask)
            patch = mask[ys.min():ys.max() + 1, xs.min():xs.max() + 1]
            split = "val" if i >= per_label_count - n_val else "train"
            samples.append(GlyphSample(image=patch, label=label, split=split))
    return GlyphDataset(samples=tuple(samples))


def generate_glyph_dataset(atlas: GlyphAtlas, space: ConstructionSpace,
                           per_label_count: int, seed: int,
                           val_fraction: float = 0.2) -> GlyphDataset:
    """Balanced dataset: exactly per_label_count samples per label, the last
    val_fraction of each label's samples marked as validation."""
    if per_label_count < 1:
        raise ValueError("per_label_count must be >= 1")
    if not atlas.glyphs:
        raise ValueError("empty atlas")
    n_val = int(per_label_count * val_fraction)
    samples = []
    for li, label in enumerate(atlas.labels):
        for i in range(per_label_count):
            rng = np.random.default_rng([seed, li, i])
            point = space.sample(rng)
            img = render_glyph(atlas, label, point, seed=int(rng.integers(2 ** 31)))
            split = "val" if i >= per_label_count - n_val else "train"
            samples.append(GlyphSample(image=img, label=label, split=split))
    return GlyphDataset(samples=tuple(samples))
