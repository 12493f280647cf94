"""The 7-axis construction space glyph and ticket rendering samples from.

Axes: background texture, ink intensity, glyph style, glyph size,
spacing, blur, contrast. Sampling is deterministic given a Generator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AxisRange:
    low: float
    high: float

    def __post_init__(self):
        if not self.low <= self.high:
            raise ValueError(f"empty axis range ({self.low}, {self.high})")

    def sample(self, rng: np.random.Generator) -> float:
        if self.low == self.high:
            return self.low
        return float(rng.uniform(self.low, self.high))


@dataclass(frozen=True)
class ConstructionSpace:
    background: AxisRange = AxisRange(215.0, 245.0)   # mean paper intensity
    texture: AxisRange = AxisRange(0.0, 8.0)          # background noise amplitude
    ink: AxisRange = AxisRange(0.0, 60.0)             # glyph intensity (dark)
    style: tuple[int, ...] = (-1, 0, 1)               # morphological thin/plain/thick
    size: AxisRange = AxisRange(22.0, 28.0)           # glyph pixel size
    spacing: AxisRange = AxisRange(2.0, 6.0)          # inter-character gap
    blur: AxisRange = AxisRange(0.0, 0.6)             # gaussian sigma
    contrast: AxisRange = AxisRange(0.85, 1.15)

    def __post_init__(self):
        if len(self.style) == 0:
            raise ValueError("style axis needs at least one value")

    def sample(self, rng: np.random.Generator) -> "SpacePoint":
        return SpacePoint(
            background=self.background.sample(rng),
            texture=self.texture.sample(rng),
            ink=self.ink.sample(rng),
            style=int(self.style[int(rng.integers(len(self.style)))]),
            size=int(round(self.size.sample(rng))),
            spacing=int(round(self.spacing.sample(rng))),
            blur=self.blur.sample(rng),
            contrast=self.contrast.sample(rng),
        )


@dataclass(frozen=True)
class SpacePoint:
    """One concrete sample: the values a single render actually uses."""
    background: float
    texture: float
    ink: float
    style: int
    size: int
    spacing: int
    blur: float
    contrast: float


def identity_point(size: int = 24) -> SpacePoint:
    """White background, black glyph, no texture/blur/style/contrast change."""
    return SpacePoint(background=255.0, texture=0.0, ink=0.0, style=0,
                      size=size, spacing=4, blur=0.0, contrast=1.0)
