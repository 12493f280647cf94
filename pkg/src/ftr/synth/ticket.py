"""Whole synthetic tickets: layouts, field rendering and exact ground truth."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from ..geometry import BBox
from .atlas import GlyphAtlas
from .dataset import (LayoutOverflowError, finish_image, make_background,
                      render_string)
from .noise import NoiseSpec, apply_noise, rotate_box
from .space import ConstructionSpace, SpacePoint

LAYOUT_KINDS = ("left-right", "top-down", "table", "non-table", "mixed")
VALUE_KINDS = ("amount", "code", "name", "date")


@dataclass(frozen=True)
class FieldTemplate:
    key: str          # canonical key text, composed of atlas labels
    value_kind: str   # amount | code | name | date

    def __post_init__(self):
        if self.value_kind not in VALUE_KINDS:
            raise ValueError(f"unknown value kind {self.value_kind!r}")


@dataclass(frozen=True)
class LayoutSpec:
    kind: str = "left-right"
    fields: tuple[FieldTemplate, ...] = ()
    page_width: int = 640
    page_height: int = 480
    margin: int = 40

    def __post_init__(self):
        if self.kind not in LAYOUT_KINDS:
            raise ValueError(f"unknown layout kind {self.kind!r}")
        keys = [f.key for f in self.fields]
        if len(set(keys)) != len(keys):
            raise ValueError("field keys must be unique per ticket")

    def keyword_dict(self) -> dict[str, list[str]]:
        return {f.key: [f.key, f.key + ":"] for f in self.fields}


@dataclass(frozen=True)
class Region:
    id: str
    bbox: BBox
    text: str
    chars: tuple[tuple[BBox, str], ...]


@dataclass(frozen=True)
class TicketRecord:
    id: str
    seed: int
    image: np.ndarray
    regions: tuple[Region, ...]
    fields: dict[str, str] = field(default_factory=dict)

    def truth_json(self) -> dict:
        return {
            "id": self.id,
            "seed": self.seed,
            "regions": [
                {
                    "id": r.id,
                    "bbox": list(r.bbox.as_tuple()),
                    "text": r.text,
                    "chars": [{"bbox": list(b.as_tuple()), "label": l} for b, l in r.chars],
                }
                for r in self.regions
            ],
            "fields": self.fields,
        }

    def save(self, out_dir: str | Path) -> None:
        root = Path(out_dir) / "tickets"
        root.mkdir(parents=True, exist_ok=True)
        Image.fromarray(self.image).save(root / f"{self.id}.png")
        with open(root / f"{self.id}.json", "w", encoding="utf-8") as f:
            json.dump(self.truth_json(), f, ensure_ascii=False, sort_keys=True)


def truth_from_json(data: dict, image: np.ndarray | None = None) -> TicketRecord:
    regions = tuple(
        Region(
            id=r["id"],
            bbox=BBox(*r["bbox"]),
            text=r["text"],
            chars=tuple((BBox(*c["bbox"]), c["label"]) for c in r.get("chars", [])),
        )
        for r in data["regions"]
    )
    img = image if image is not None else np.zeros((1, 1), dtype=np.uint8)
    return TicketRecord(id=data["id"], seed=data.get("seed", 0), image=img,
                        regions=regions, fields=dict(data.get("fields", {})))


def load_ticket(corpus_dir: str | Path, ticket_id: str) -> TicketRecord:
    root = Path(corpus_dir) / "tickets"
    image = np.asarray(Image.open(root / f"{ticket_id}.png").convert("L"))
    with open(root / f"{ticket_id}.json", encoding="utf-8") as f:
        data = json.load(f)
    return truth_from_json(data, image)


def default_layout(atlas: GlyphAtlas, n_fields: int = 4, kind: str = "left-right") -> LayoutSpec:
    """Field templates with 2-glyph CJK keys drawn from the atlas."""
    cjk = atlas.chinese_labels
    if len(cjk) < 2 * n_fields:
        raise ValueError("atlas too small for the requested field count")
    fields = tuple(
        FieldTemplate(key=cjk[2 * i] + cjk[2 * i + 1], value_kind=VALUE_KINDS[i % len(VALUE_KINDS)])
        for i in range(n_fields)
    )
    return LayoutSpec(kind=kind, fields=fields)


def _gen_value(kind: str, atlas: GlyphAtlas, rng: np.random.Generator) -> str:
    if kind == "amount":
        whole = "".join(str(rng.integers(10)) for _ in range(int(rng.integers(3, 6))))
        return f"{whole}.{rng.integers(10)}{rng.integers(10)}"
    if kind == "code":
        # characters whose printed shapes stay distinct at small sizes;
        # avoids pairs such as O/0, I/1/l and case pairs like C/c or S/s
        pool = "ABEFHJLMNRT2345679"
        return "".join(pool[int(rng.integers(len(pool)))] for _ in range(int(rng.integers(6, 10))))
    if kind == "date":
        return (f"{2020 + int(rng.integers(8)):04d}-{1 + int(rng.integers(12)):02d}"
                f"-{1 + int(rng.integers(28)):02d}")
    cjk = atlas.chinese_labels
    return "".join(cjk[int(rng.integers(len(cjk)))] for _ in range(int(rng.integers(2, 5))))


def _placements(layout: LayoutSpec, row_h: int, rng: np.random.Generator):
    """Yield (field_index, key_x, key_y, value_mode) placements.

    value_mode is 'right' (same row) or 'below' (next row, small indent)."""
    m = layout.margin
    for i in range(len(layout.fields)):
        if layout.kind == "left-right":
            yield i, m, m + i * row_h, "right"
        elif layout.kind == "top-down":
            # key row + value row per field, so use a tighter vertical step
            yield i, m, m + i * (row_h + row_h // 2), "below"
        elif layout.kind == "table":
            col = i % 2
            yield i, m + col * (layout.page_width // 2), m + (i // 2) * row_h, "right"
        elif layout.kind == "non-table":
            jitter = int(rng.integers(0, 30))
            yield i, m + jitter, m + i * row_h, "right"
        else:  # mixed
            if i % 2 == 0:
                yield i, m, m + i * row_h, "right"
            else:
                yield i, m + layout.page_width // 2, m + (i - 1) * row_h, "below"


def generate_ticket(atlas: GlyphAtlas, layout: LayoutSpec, space: ConstructionSpace,
                    noise: NoiseSpec, seed: int, ticket_id: str | None = None) -> TicketRecord:
    """Render one ticket with exact ground truth.

    Noise is applied to the raster only; ground truth keeps pre-noise geometry
    except tilt, which transforms the boxes consistently with the image."""
    rng = np.random.default_rng([seed, 0x71C7])
    point = space.sample(rng)
    h, w = layout.page_height, layout.page_width
    canvas = make_background((h, w), point, rng)
    row_h = 2 * point.size + 10
    kv_gap = 28
    below_indent = 6

    regions: list[Region] = []
    fields: dict[str, str] = {}
    for i, kx, ky, mode in _placements(layout, row_h, rng):
        tpl = layout.fields[i]
        value = _gen_value(tpl.value_kind, atlas, rng)
        key_chars = render_string(canvas, atlas, tpl.key + ":", kx, ky, point)
        key_box = _union_box(key_chars)
        if mode == "right":
            vx, vy = int(key_box.x_max) + kv_gap, ky
        else:
            vx, vy = kx + below_indent, ky + point.size + 8
        value_chars = render_string(canvas, atlas, value, vx, vy, point)
        value_box = _union_box(value_chars)
        for rid, text, chars, box in ((f"f{i}k", tpl.key + ":", key_chars, key_box),
                                      (f"f{i}v", value, value_chars, value_box)):
            padded = BBox(box.x_min - 2, box.y_min - 2, box.x_max + 2, box.y_max + 2)
            if padded.x_min < 0 or padded.y_min < 0 or padded.x_max > w or padded.y_max > h:
                raise LayoutOverflowError(f"region {rid} exceeds the page")
            regions.append(Region(id=rid, bbox=padded, text=text, chars=tuple(chars)))
        fields[tpl.key] = value

    image = finish_image(canvas, point)
    image = apply_noise(image, noise, seed)
    if noise.tilt_deg:
        center = ((w - 1) / 2.0, (h - 1) / 2.0)
        regions = [
            Region(id=r.id, bbox=rotate_box(r.bbox, noise.tilt_deg, center), text=r.text,
                   chars=tuple((rotate_box(b, noise.tilt_deg, center), l) for b, l in r.chars))
            for r in regions
        ]
    return TicketRecord(id=ticket_id or f"t{seed:08d}", seed=seed, image=image,
                        regions=tuple(regions), fields=fields)


def _union_box(chars: list[tuple[BBox, str]]) -> BBox:
    return BBox(min(b.x_min for b, _ in chars), min(b.y_min for b, _ in chars),
                max(b.x_max for b, _ in chars), max(b.y_max for b, _ in chars))


def generate_corpus(atlas: GlyphAtlas, layout: LayoutSpec, space: ConstructionSpace,
                    noise: NoiseSpec, count: int, seed: int) -> list[TicketRecord]:
    """Per-item derived seeds keep generation order-independent."""
    return [
        generate_ticket(atlas, layout, space, noise, seed=seed + i, ticket_id=f"t{i:05d}")
        for i in range(count)
    ]


def save_corpus(tickets: list[TicketRecord], out_dir: str | Path,
                keywords: dict[str, list[str]] | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for t in tickets:
        t.save(out)
    if keywords is not None:
        with open(out / "keywords.json", "w", encoding="utf-8") as f:
            json.dump(keywords, f, ensure_ascii=False, sort_keys=True)
