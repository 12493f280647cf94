"""Bundled glyph shapes.

The atlas is generated procedurally so the package carries no font files:
CJK-class glyphs are seeded stroke compositions on a fixed grid, Latin
letters / digits / punctuation come from Pillow's built-in font. Everything
is deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw, ImageFont

GLYPH_SIZE = 24

DIGITS = "0123456789"
LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz"
PUNCTUATION = ".,:;!?()[]%#&*+-=/<>"

# fraction of CJK-class glyphs deliberately built from disconnected strokes,
# reproducing the stroke-incoherence failure mode of connected-component
# segmentation
_SPLIT_FRACTION = 0.3


@dataclass(frozen=True)
class GlyphAtlas:
    """label -> boolean coverage mask (GLYPH_SIZE x GLYPH_SIZE) plus script class."""
    glyphs: dict[str, np.ndarray]
    scripts: dict[str, str]  # chinese | letter | digit | punctuation

    def __post_init__(self):
        if set(self.glyphs) != set(self.scripts):
            raise ValueError("glyphs and scripts must cover the same labels")
        for label, mask in self.glyphs.items():
            if mask.size == 0 or not mask.any():
                raise ValueError(f"empty glyph mask for label {label!r}")

    @property
    def labels(self) -> list[str]:
        return sorted(self.glyphs)

    def labels_of(self, script: str) -> list[str]:
        return sorted(l for l, s in self.scripts.items() if s == script)

    @property
    def chinese_labels(self) -> list[str]:
        return self.labels_of("chinese")


def _procedural_glyph(char: str) -> np.ndarray | None:
    """Hand-built masks where the bundled font fails at this resolution:
    chunky versions of the tiny marks (font renderings are 2-3 px and do not
    survive rescaling) and a single-story 'a' (the font's double-story 'a'
    collapses into an '8' once strokes thicken)."""
    n = GLYPH_SIZE
    m = np.zeros((n, n), dtype=bool)
    if char == "a":
        m[9:19, 6:17] = True    # bowl ring
        m[11:17, 8:15] = False
        m[9:19, 15:18] = True   # right stem
    elif char == "g":
        # double-story form: the font's single-story 'g' is a '9' twin
        m[7:14, 7:17] = True    # upper bowl ring
        m[9:12, 9:15] = False
        m[7:9, 16:20] = True    # ear
        m[13:16, 12:15] = True  # neck
        m[15:22, 5:15] = True   # lower loop ring
        m[17:20, 7:13] = False
    elif char == ".":
        m[15:22, 8:15] = True
    elif char == ",":
        m[11:17, 9:15] = True
        m[17:20, 8:13] = True
        m[20:23, 6:11] = True
    elif char == ":":
        m[4:10, 9:15] = True
        m[15:21, 9:15] = True
    elif char == ";":
        m[2:8, 9:15] = True
        m[11:16, 9:15] = True
        m[16:19, 8:13] = True
        m[19:22, 6:11] = True
    elif char == "-":
        m[12:16, 3:21] = True
    else:
        return None
    return m


def _render_font_glyph(char: str, font) -> np.ndarray:
    img = Image.new("L", (GLYPH_SIZE, GLYPH_SIZE), 0)
    draw = ImageDraw.Draw(img)
    draw.text((GLYPH_SIZE // 2, GLYPH_SIZE // 2), char, font=font, fill=255, anchor="mm")
    mask = np.asarray(img) > 64
    if not mask.any():
        raise ValueError(f"font produced an empty mask for {char!r}")
    return mask


def _stroke_glyph(rng: np.random.Generator, split: bool) -> np.ndarray:
    """Seeded stroke composition: full-extent frame strokes plus partials.

    Non-split glyphs get a crossing horizontal+vertical pair so they form one
    connected component; split glyphs are two disjoint vertical halves.
    """
    n = GLYPH_SIZE
    lo, hi = 2, n - 2  # ink always spans [lo, hi) so the tight box is stable
    m = np.zeros((n, n), dtype=bool)
    t = 2  # stroke thickness

    def hbar(row, x0, x1):
        m[row:row + t, x0:x1] = True

    def vbar(col, y0, y1):
        m[y0:y1, col:col + t] = True

    if split:
        # two disconnected vertical structures with a clear gap in between;
        # varied bar extents and inner verticals keep the halves distinctive
        gap0 = n // 2 - 2
        gap1 = n // 2 + 2
        vbar(lo, lo, hi)
        vbar(hi - t, lo, hi)
        for x0, x1 in ((lo, gap0), (gap1, hi)):
            for _ in range(int(rng.integers(2, 4))):
                row = int(rng.integers(lo, hi - t))
                b0 = int(rng.integers(x0, x0 + 4))
                hbar(row, b0, int(rng.integers(b0 + 4, x1 + 1)))
            if rng.random() < 0.7:
                col = int(rng.integers(x0 + 2, x1 - t))
                y0 = int(rng.integers(lo, n // 2))
                vbar(col, y0, int(rng.integers(y0 + 5, hi + 1)))
        m[:, gap0:gap1] = False
        m[:lo, :] = False
        m[hi:, :] = False
        m[:, :lo] = False
        m[:, hi:] = False
    else:
        hbar(int(rng.integers(lo, hi - t)), lo, hi)
        vbar(int(rng.integers(lo, hi - t)), lo, hi)
        # anchor the extremes so every glyph spans the same tight box
        hbar(lo, lo, int(rng.integers(lo + 6, hi)))
        hbar(hi - t, int(rng.integers(lo, hi - 6)), hi)
        for _ in range(int(rng.integers(2, 5))):
            if rng.random() < 0.5:
                row = int(rng.integers(lo, hi - t))
                x0 = int(rng.integers(lo, n // 2))
                hbar(row, x0, int(rng.integers(x0 + 4, hi + 1)))
            else:
                col = int(rng.integers(lo, hi - t))
                y0 = int(rng.integers(lo, n // 2))
                vbar(col, y0, int(rng.integers(y0 + 4, hi + 1)))
    return m


def build_default_atlas(num_chinese: int = 200) -> GlyphAtlas:
    """Default desk atlas: num_chinese CJK glyphs + 62 alphanumerics + 20 marks."""
    if num_chinese < 1:
        raise ValueError("num_chinese must be >= 1")
    glyphs: dict[str, np.ndarray] = {}
    scripts: dict[str, str] = {}

    font = ImageFont.load_default(size=20)
    for ch in DIGITS:
        glyphs[ch] = _render_font_glyph(ch, font)
        scripts[ch] = "digit"
    for ch in LETTERS:
        override = _procedural_glyph(ch)
        glyphs[ch] = override if override is not None else _render_font_glyph(ch, font)
        scripts[ch] = "letter"
    for ch in PUNCTUATION:
        mark = _procedural_glyph(ch)
        glyphs[ch] = mark if mark is not None else _render_font_glyph(ch, font)
        scripts[ch] = "punctuation"

    seen = {m.tobytes() for m in glyphs.values()}
    for i in range(num_chinese):
        label = chr(0x4E00 + i)
        split = (i % int(1 / _SPLIT_FRACTION)) == 0
        salt = 0
        while True:
            rng = np.random.default_rng([0x4E00 + i, salt])
            mask = _stroke_glyph(rng, split)
            key = mask.tobytes()
            if key not in seen:
                break
            salt += 1
        seen.add(key)
        glyphs[label] = mask
        scripts[label] = "chinese"

    return GlyphAtlas(glyphs=glyphs, scripts=scripts)
