"""End-to-end orchestration: configuration, the online ticket path, batch
processing with a persisted correction queue, and correction application.

Batch outputs are deterministic: identical (corpus, config, seed) produce
byte-identical result files regardless of the parallelism degree, so wall
clock timings are written to a separate, non-normative file.
"""
from __future__ import annotations

import json
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .compose import CharResult, extract_fields
from . import compose
from .detect import (TextRegion, aggregate_pixels, crop_regions, detect_maps,
                     match_boxes)
from .geometry import BBox
from .metrics import MetricsReport, p_char, p_ticket
from .recognize import GlyphClassifier, apply_threshold, classify
from .segment import CharDetectorModel, segment_region

DETECTORS = ("baseline", "oracle", "external")


class ConflictError(ValueError):
    """An item was already corrected with a different label."""


@dataclass(frozen=True)
class PipelineConfig:
    detector: str = "baseline"
    lucnms_threshold: float = 0.3
    model_path: str | None = None          # character detector (segmentation)
    chinese_model_path: str | None = None  # Chinese-only classifier
    tau: float = 0.999                     # confidence acceptance threshold
    keywords_path: str | None = None
    external_regions_dir: str | None = None  # detector="external" inputs
    map_threshold: float = 0.5             # probability-map binarization
    jobs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.detector not in DETECTORS:
            raise ValueError(f"unknown detector {self.detector!r}")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau outside [0,1]: {self.tau}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        for p in (self.model_path, self.chinese_model_path, self.keywords_path,
                  self.external_regions_dir):
            if p is not None and not Path(p).exists():
                raise FileNotFoundError(p)

    @staticmethod
    def load(path: str | Path | None = None, **overrides) -> "PipelineConfig":
        """Load from a JSON file; falls back to $FTR_CONFIG when no path is
        given, then to defaults."""
        if path is None:
            path = os.environ.get("FTR_CONFIG")
        data: dict = {}
        if path is not None:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return PipelineConfig(**data)


@dataclass
class PipelineModels:
    """Immutable model bundle shared across workers."""
    char_detector: CharDetectorModel
    chinese: GlyphClassifier

    @staticmethod
    def load(config: PipelineConfig) -> "PipelineModels":
        if config.model_path is None or config.chinese_model_path is None:
            raise ValueError("config must reference model_path and chinese_model_path")
        return PipelineModels(char_detector=CharDetectorModel.load(config.model_path),
                              chinese=GlyphClassifier.load(config.chinese_model_path))


@dataclass(frozen=True)
class CorrectionItem:
    id: str
    ticket_id: str
    region_id: str
    char_index: int                       # index into the region's char list
    crop_path: str                        # PNG of the glyph crop
    candidates: tuple[tuple[str, float], ...]  # top-k, descending confidence
    status: str = "pending"               # pending | corrected
    correction: str | None = None
    created_at: str | None = None         # null in batch output (determinism)
    corrected_at: str | None = None

    def to_json(self) -> dict:
        d = asdict(self)
        d["candidates"] = [[l, c] for l, c in self.candidates]
        return d

    @staticmethod
    def from_json(d: dict) -> "CorrectionItem":
        d = dict(d)
        d["candidates"] = tuple((l, float(c)) for l, c in d["candidates"])
        return CorrectionItem(**d)


@dataclass
class TicketResult:
    ticket_id: str
    regions: list[dict]            # {id, bbox, text, complete, chars:[...]}
    fields: dict[str, str]
    pending: list[str]             # correction item ids

    def to_json(self) -> dict:
        return {"id": self.ticket_id, "regions": self.regions,
                "fields": self.fields, "pending": self.pending}


def _detect_regions(image: np.ndarray, config: PipelineConfig,
                    truth: dict | None, ticket_id: str) -> list[TextRegion]:
    if config.detector == "oracle":
        if truth is None:
            raise ValueError("oracle detector needs ground truth")
        return [TextRegion(id=i, bbox=BBox(*r["bbox"]), mask=None, score=1.0)
                for i, r in enumerate(truth["regions"])]
    if config.detector == "external":
        if config.external_regions_dir is None:
            raise ValueError("external detector needs external_regions_dir")
        with open(Path(config.external_regions_dir) / f"{ticket_id}.json",
                  encoding="utf-8") as f:
            data = json.load(f)
        return [TextRegion(id=i, bbox=BBox(*r["bbox"]), mask=None, score=1.0)
                for i, r in enumerate(data["regions"])]
    text, kernel = detect_maps(image)
    regions = aggregate_pixels(text >= config.map_threshold,
                               kernel >= config.map_threshold, prob=text)
    # reading order makes downstream ids stable
    regions.sort(key=lambda r: (r.bbox.y_min, r.bbox.x_min))
    return regions


def _region_ids(regions: Sequence[TextRegion], config: PipelineConfig,
                truth: dict | None) -> list[str]:
    """Stable region ids; when truth is available, detected regions inherit
    the id of the truth region they match (IoU >= 0.5) so metrics align."""
    if config.detector == "oracle" and truth is not None:
        return [r["id"] for r in truth["regions"]]
    ids = [f"r{i:03d}" for i in range(len(regions))]
    if truth is not None:
        truth_boxes = [BBox(*r["bbox"]) for r in truth["regions"]]
        for pi, ti in match_boxes([r.bbox for r in regions], truth_boxes):
            ids[pi] = truth["regions"][ti]["id"]
    return ids


def run_ticket(image: np.ndarray, config: PipelineConfig, models: PipelineModels,
               truth: dict | None = None, ticket_id: str = "ticket",
               keywords: dict[str, list[str]] | None = None
               ) -> tuple[TicketResult, list[tuple[CorrectionItem, np.ndarray]]]:
    """The online path: detect -> crop -> segment -> classify -> assemble ->
    structure. Returns the result plus (item, crop image) pairs for every
    below-threshold glyph."""
    regions = _detect_regions(image, config, truth, ticket_id)
    ids = _region_ids(regions, config, truth)
    crops = crop_regions(image, regions) if regions else []
    out_regions: list[dict] = []
    queue: list[tuple[CorrectionItem, np.ndarray]] = []
    pending_ids: list[str] = []
    for rid, crop in zip(ids, crops):
        seg = segment_region(crop.image, models.char_detector,
                             lucnms_threshold=config.lucnms_threshold)
        preds = [apply_threshold(classify(models.chinese, glyph), config.tau)
                 for _, glyph in seg.chinese_crops]
        text, chars, pending = compose.assemble_region(seg, preds)
        char_records = []
        item_of_crop: dict[int, str] = {}
        for crop_index in pending:
            item_id = f"{ticket_id}.{rid}.{crop_index}"
            item_of_crop[crop_index] = item_id
        # map each ordered char back to its chinese-crop index by bbox
        box_to_crop = {b.as_tuple(): i for i, (b, _) in enumerate(seg.chinese_crops)}
        for k, c in enumerate(chars):
            rec = {
                "bbox": list(crop.to_image_coords(c.bbox).as_tuple()),
                "char": c.char,
                "confidence": c.confidence,
                "source": c.source,
            }
            ci = box_to_crop.get(c.bbox.as_tuple())
            if ci is not None and ci in item_of_crop:
                item_id = item_of_crop[ci]
                rec["pending_item"] = item_id
                pred = preds[ci]
                item = CorrectionItem(
                    id=item_id, ticket_id=ticket_id, region_id=rid, char_index=k,
                    crop_path=f"crops/{item_id}.png",
                    candidates=tuple(pred.candidates[:5]))
                queue.append((item, seg.chinese_crops[ci][1]))
                pending_ids.append(item_id)
            char_records.append(rec)
        out_regions.append({
            "id": rid,
            "bbox": list(crop.region.bbox.as_tuple()),
            "text": text,
            "complete": not pending,
            "chars": char_records,
        })
    fields = extract_fields([(BBox(*r["bbox"]), r["text"]) for r in out_regions],
                            keywords or {})
    result = TicketResult(ticket_id=ticket_id, regions=out_regions,
                          fields=fields, pending=pending_ids)
    return result, queue


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(obj) -> bytes:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True,
                      separators=(",", ":")).encode("utf-8")


def _load_corpus(input_dir: Path) -> list[tuple[str, Path, Path | None]]:
    tickets = input_dir / "tickets"
    root = tickets if tickets.is_dir() else input_dir
    out = []
    for png in sorted(root.glob("*.png")):
        tid = png.stem
        truth = png.with_suffix(".json")
        out.append((tid, png, truth if truth.exists() else None))
    return out


def load_keywords(config: PipelineConfig, input_dir: Path) -> dict[str, list[str]]:
    path = Path(config.keywords_path) if config.keywords_path else input_dir / "keywords.json"
    if path.exists():
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    return {}


def run_batch(input_dir: str | Path, config: PipelineConfig, out_dir: str | Path,
              models: PipelineModels | None = None) -> MetricsReport | None:
    """Process a corpus directory; writes results/<id>.json (atomic),
    crops/<item>.png, queue.jsonl, and report.json when truth is available.

    Per-item errors are recorded in errors.json and do not abort the batch.
    """
    input_dir = Path(input_dir)
    out = Path(out_dir)
    (out / "results").mkdir(parents=True, exist_ok=True)
    (out / "crops").mkdir(parents=True, exist_ok=True)
    models = models or PipelineModels.load(config)
    keywords = load_keywords(config, input_dir)
    if keywords:
        _atomic_write(out / "keywords.json", _dump_json(keywords))
    items = _load_corpus(input_dir)

    def process(entry):
        tid, png, truth_path = entry
        image = np.asarray(Image.open(png).convert("L"))
        truth = None
        if truth_path is not None:
            with open(truth_path, encoding="utf-8") as f:
                truth = json.load(f)
        result, queue = run_ticket(image, config, models, truth=truth,
                                   ticket_id=tid, keywords=keywords)
        _atomic_write(out / "results" / f"{tid}.json", _dump_json(result.to_json()))
        for item, glyph in queue:
            img = (np.clip(glyph, 0, 1) * 255).astype(np.uint8)
            Image.fromarray(img).save(out / item.crop_path)
        return tid, result, queue, truth

    t0 = time.perf_counter()
    results: dict[str, TicketResult] = {}
    truths: dict[str, dict] = {}
    all_items: list[CorrectionItem] = []
    errors: list[dict] = []
    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        for entry, fut in [(e, pool.submit(process, e)) for e in items]:
            try:
                tid, result, queue, truth = fut.result()
            except Exception as exc:  # noqa: BLE001 - per-item error record
                errors.append({"id": entry[0], "error": str(exc)})
                continue
            results[tid] = result
            all_items.extend(item for item, _ in queue)
            if truth is not None:
                truths[tid] = truth
    elapsed = time.perf_counter() - t0

    all_items.sort(key=lambda it: it.id)
    lines = b"".join(_dump_json(it.to_json()) + b"\n" for it in all_items)
    _atomic_write(out / "queue.jsonl", lines)
    if errors:
        _atomic_write(out / "errors.json", _dump_json(errors))

    report = None
    if truths:
        report = evaluate_results(results, truths)
        _atomic_write(out / "report.json", _dump_json(report.to_json()))
        _atomic_write(out / "report.txt", report.to_table().encode("utf-8"))
    # wall-clock timings are hardware-dependent: kept out of the deterministic
    # result set on purpose
    timing = {"total_s": elapsed,
              "per_ticket_ms": elapsed / max(len(items), 1) * 1000.0,
              "tickets": len(items)}
    with open(out / "timing.json", "w", encoding="utf-8") as f:
        json.dump(timing, f)
    return report


def evaluate_results(results: dict[str, TicketResult],
                     truths: dict[str, dict]) -> MetricsReport:
    got_strings = {tid: {r["id"]: r["text"] for r in res.regions}
                   for tid, res in results.items() if tid in truths}
    want_strings = {tid: {r["id"]: r["text"] for r in t["regions"]}
                    for tid, t in truths.items()}
    pc, rc, nc = p_char(got_strings, want_strings)
    got_fields = {tid: res.fields for tid, res in results.items()}
    want_fields = {tid: dict(t.get("fields", {})) for tid, t in truths.items()}
    required = {tid: sorted(f) for tid, f in want_fields.items()}
    pt, rt, nt = p_ticket(got_fields, want_fields, required)
    # pooled detection quality of the region stage
    tp = fp = fn = 0
    for tid, t in truths.items():
        truth_boxes = [BBox(*r["bbox"]) for r in t["regions"]]
        pred_boxes = [BBox(*r["bbox"]) for r in results[tid].regions] if tid in results else []
        m = len(match_boxes(pred_boxes, truth_boxes))
        tp += m
        fp += len(pred_boxes) - m
        fn += len(truth_boxes) - m
    prec = tp / (tp + fp) if tp + fp else 1.0
    rec = tp / (tp + fn) if tp + fn else 1.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return MetricsReport(p_char=pc, p_ticket=pt, r_char=rc, n_char=nc,
                         r_ticket=rt, n_ticket=nt,
                         per_stage={"detection": (prec, rec, f1)})


# --------------------------------------------------------------------------
# correction queue persistence (JSON-lines, latest record per id wins)

def load_queue(out_dir: str | Path) -> dict[str, CorrectionItem]:
    path = Path(out_dir) / "queue.jsonl"
    items: dict[str, CorrectionItem] = {}
    if not path.exists():
        return items
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                item = CorrectionItem.from_json(json.loads(line))
                items[item.id] = item
    return items


def _append_queue(out_dir: Path, item: CorrectionItem) -> None:
    with open(out_dir / "queue.jsonl", "a", encoding="utf-8") as f:
        f.write(_dump_json(item.to_json()).decode("utf-8") + "\n")


def load_result(out_dir: str | Path, ticket_id: str) -> dict:
    with open(Path(out_dir) / "results" / f"{ticket_id}.json", encoding="utf-8") as f:
        return json.load(f)


def apply_correction(out_dir: str | Path, item_id: str, label: str) -> dict:
    """Mark a queued glyph corrected and re-derive its ticket's strings and
    fields. Idempotent for repeated identical labels; a different label on an
    already-corrected item is a conflict."""
    if not label:
        raise ValueError("empty correction label")
    out = Path(out_dir)
    queue = load_queue(out)
    if item_id not in queue:
        raise KeyError(f"unknown correction item {item_id!r}")
    item = queue[item_id]
    if item.status == "corrected":
        if item.correction != label:
            raise ConflictError(
                f"item {item_id} already corrected as {item.correction!r}")
        return load_result(out, item.ticket_id)

    result = load_result(out, item.ticket_id)
    region = next(r for r in result["regions"] if r["id"] == item.region_id)
    rec = region["chars"][item.char_index]
    rec["char"] = label
    rec["confidence"] = 1.0
    rec["source"] = "manual"
    rec.pop("pending_item", None)
    region["text"] = "".join(c["char"] for c in region["chars"])
    region["complete"] = not any("pending_item" in c for c in region["chars"])
    result["pending"] = [p for p in result["pending"] if p != item_id]

    keywords_path = out / "keywords.json"
    keywords = {}
    if keywords_path.exists():
        with open(keywords_path, encoding="utf-8") as f:
            keywords = json.load(f)
    result["fields"] = extract_fields(
        [(BBox(*r["bbox"]), r["text"]) for r in result["regions"]], keywords)

    _atomic_write(out / "results" / f"{item.ticket_id}.json", _dump_json(result))
    corrected = CorrectionItem(
        id=item.id, ticket_id=item.ticket_id, region_id=item.region_id,
        char_index=item.char_index, crop_path=item.crop_path,
        candidates=item.candidates, status="corrected", correction=label,
        created_at=item.created_at,
        corrected_at=datetime.now(timezone.utc).isoformat())
    _append_queue(out, corrected)
    return result
