"""Seeded procedural ticket noise: each effect is driven by one intensity scalar.

Tilt is the only geometric effect; it rotates the raster and the caller is
responsible for transforming ground-truth boxes with `rotate_box`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields as dc_fields

import numpy as np
from scipy import ndimage

from ..geometry import BBox


@dataclass(frozen=True)
class NoiseSpec:
    abrasion: float = 0.0
    mutilation: float = 0.0
    overlap: float = 0.0
    wrinkle: float = 0.0
    occlusion: float = 0.0
    shadow: float = 0.0
    clutter: float = 0.0
    illumination: float = 0.0
    tilt_deg: float = 0.0  # degrees, bounded

    MAX_TILT = 10.0

    def __post_init__(self):
        for f in dc_fields(self):
            v = getattr(self, f.name)
            if f.name == "tilt_deg":
                if abs(v) > self.MAX_TILT:
                    raise ValueError(f"tilt beyond +/-{self.MAX_TILT} degrees: {v}")
            elif not 0.0 <= v <= 1.0:
                raise ValueError(f"{f.name} intensity outside [0,1]: {v}")

    def is_zero(self) -> bool:
        return all(getattr(self, f.name) == 0.0 for f in dc_fields(self))


NOISE_PRESETS = {
    "low": NoiseSpec(abrasion=0.05, wrinkle=0.1, clutter=0.03,
                     illumination=0.1, tilt_deg=0.3),
    "med": NoiseSpec(abrasion=0.15, wrinkle=0.25, shadow=0.2, clutter=0.08,
                     illumination=0.25, tilt_deg=0.8),
    "high": NoiseSpec(abrasion=0.35, mutilation=0.3, overlap=0.3, wrinkle=0.5,
                      occlusion=0.3, shadow=0.5, clutter=0.3,
                      illumination=0.5, tilt_deg=4.0),
}


def _bg_estimate(img: np.ndarray) -> float:
    return float(np.median(img))


def _abrasion(img, rng, a):
    bg = _bg_estimate(img)
    h, w = img.shape
    for _ in range(int(round(a * 40))):
        bw = int(rng.integers(2, 7))
        bh = int(rng.integers(2, 7))
        x = int(rng.integers(0, max(1, w - bw)))
        y = int(rng.integers(0, max(1, h - bh)))
        img[y:y + bh, x:x + bw] = bg
    return img


def _mutilation(img, rng, m):
    h, w = img.shape
    size = int(m * 0.15 * min(h, w)) + 2
    corner = int(rng.integers(4))
    fill = 250.0 if rng.random() < 0.5 else 30.0
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    if corner == 0:
        tri = xs + ys < size
    elif corner == 1:
        tri = (w - 1 - xs) + ys < size
    elif corner == 2:
        tri = xs + (h - 1 - ys) < size
    else:
        tri = (w - 1 - xs) + (h - 1 - ys) < size
    img[tri] = fill
    return img


def _overlap(img, rng, o):
    h, w = img.shape
    for _ in range(int(round(o * 6))):
        pw, ph = int(rng.integers(8, 20)), int(rng.integers(8, 20))
        x = int(rng.integers(0, max(1, w - pw - 6)))
        y = int(rng.integers(0, max(1, h - ph)))
        dx = int(rng.integers(2, 6))
        patch = img[y:y + ph, x:x + pw].copy()
        img[y:y + ph, x + dx:x + dx + pw] = np.minimum(img[y:y + ph, x + dx:x + dx + pw], patch)
    return img


def _wrinkle(img, rng, wv):
    h, w = img.shape
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    out = img.astype(np.float64)
    for _ in range(int(round(wv * 5))):
        theta = rng.uniform(0, math.pi)
        c = rng.uniform(0, math.hypot(h, w))
        d = xs * math.cos(theta) + ys * math.sin(theta) - c
        profile = np.exp(-(d ** 2) / (2 * 2.0 ** 2))
        out -= 30.0 * wv * profile
    return out


def _occlusion(img, rng, c):
    h, w = img.shape
    for _ in range(max(1, int(round(c * 3)))):
        bw = int(rng.integers(8, int(8 + c * 40) + 1))
        bh = int(rng.integers(6, int(6 + c * 25) + 1))
        x = int(rng.integers(0, max(1, w - bw)))
        y = int(rng.integers(0, max(1, h - bh)))
        img[y:y + bh, x:x + bw] = 45.0
    return img


def _shadow(img, rng, s):
    h, w = img.shape
    theta = rng.uniform(0, 2 * math.pi)
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    d = (xs * math.cos(theta) + ys * math.sin(theta))
    d = (d - d.min()) / max(float(np.ptp(d)), 1e-9)
    return img * (1.0 - 0.45 * s * d)


def _clutter(img, rng, cl):
    h, w = img.shape
    n = int(round(cl * 0.0015 * h * w))
    if n:
        xs = rng.integers(0, w, size=n)
        ys = rng.integers(0, h, size=n)
        img[ys, xs] = np.minimum(img[ys, xs], rng.uniform(40, 140, size=n))
    return img


def _illumination(img, rng, il):
    h, w = img.shape
    coarse = rng.uniform(1.0 - 0.35 * il, 1.0 + 0.15 * il, size=(4, 4))
    field = ndimage.zoom(coarse, (h / 4, w / 4), order=1)[:h, :w]
    return img * field


def apply_noise(image: np.ndarray, spec: NoiseSpec, seed: int) -> np.ndarray:
    """Apply the full noise stack; a zero spec returns the input unchanged."""
    if image.ndim != 2:
        raise ValueError("expected a single-channel grayscale image")
    if spec.is_zero():
        return image
    rng = np.random.default_rng([seed, 0x401E])
    img = image.astype(np.float64)
    if spec.abrasion:
        img = _abrasion(img, rng, spec.abrasion)
    if spec.mutilation:
        img = _mutilation(img, rng, spec.mutilation)
    if spec.overlap:
        img = _overlap(img, rng, spec.overlap)
    if spec.wrinkle:
        img = _wrinkle(img, rng, spec.wrinkle)
    if spec.occlusion:
        img = _occlusion(img, rng, spec.occlusion)
    if spec.shadow:
        img = _shadow(img, rng, spec.shadow)
    if spec.clutter:
        img = _clutter(img, rng, spec.clutter)
    if spec.illumination:
        img = _illumination(img, rng, spec.illumination)
    if spec.tilt_deg:
        img = ndimage.rotate(img, spec.tilt_deg, reshape=False, order=1,
                             mode="constant", cval=_bg_estimate(img))
    return np.clip(img, 0, 255).astype(np.uint8)


def rotate_box(box: BBox, angle_deg: float, center: tuple[float, float]) -> BBox:
    """Axis-aligned bound of a box whose corners are rotated the way
    `apply_noise` rotates the raster (scipy.ndimage.rotate semantics)."""
    # ndimage.rotate(angle) maps output coords back through +angle; a point at
    # input (x, y) lands at the -angle rotation about the center in array frame
    cy, cx = center[1], center[0]
    a = math.radians(angle_deg)
    cos, sin = math.cos(a), math.sin(a)
    xs = np.array([box.x_min, box.x_max, box.x_min, box.x_max]) - cx
    ys = np.array([box.y_min, box.y_min, box.y_max, box.y_max]) - cy
    rx = xs * cos + ys * sin + cx
    ry = -xs * sin + ys * cos + cy
    return BBox(float(rx.min()), float(ry.min()), float(rx.max()), float(ry.max()))
