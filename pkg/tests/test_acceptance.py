"""End-to-end acceptance gate.

Each test here pins one externally observable guarantee of the system:
algorithmic oracles for the geometric kernels, exact round-trip recovery on
clean synthetic tickets, accuracy floors under medium noise, the documented
ordering of the segmentation methods, threshold-sweep monotonicity,
deterministic parallel batches, and the manual-correction loop closing the
accuracy gap. Budgeted stages also assert their wall-clock limits.
"""
import dataclasses
import json
import time
from pathlib import Path

import numpy as np
import pytest

from ftr.detect import DICE_EPS, aggregate_pixels, combined_loss, dice_loss, match_boxes
from ftr.geometry import AnchorSpec, BBox, ScoredBox, generate_anchors, iou, lucnms
from ftr.metrics import p_char, p_ticket
from ftr.pipeline import (PipelineConfig, PipelineModels, apply_correction,
                          load_queue, load_result, run_batch)
from ftr.recognize import classify, normalize_glyph, sweep_thresholds
from ftr.segment import cc_segment, projection_segment, segment_region
from ftr.synth import (NOISE_PRESETS, NoiseSpec, default_layout, generate_ticket,
                       save_corpus)

from test_segment import line_crop, split_label

HIGH_TAU = 1.0 - 1e-9
LAYOUT_KINDS = ("left-right", "top-down", "table", "non-table", "mixed")


def make_corpus(atlas, space, noise, count, seed, out_dir, n_fields=3):
    """Mixed-layout ground-truthed corpus with keyword declarations."""
    tickets = [
        generate_ticket(atlas, default_layout(atlas, n_fields=n_fields,
                                              kind=LAYOUT_KINDS[i % len(LAYOUT_KINDS)]),
                        space, noise, seed=seed + i, ticket_id=f"t{i:05d}")
        for i in range(count)
    ]
    save_corpus(tickets, out_dir,
                keywords=default_layout(atlas, n_fields=n_fields).keyword_dict())
    return out_dir


def read_truths(corpus: Path) -> dict[str, dict]:
    return {p.stem: json.loads(p.read_text(encoding="utf-8"))
            for p in sorted((corpus / "tickets").glob("*.json"))}


def corpus_p_char(out: Path, truths: dict[str, dict]) -> float:
    got = {tid: {r["id"]: r["text"] for r in load_result(out, tid)["regions"]}
           for tid in truths}
    want = {tid: {r["id"]: r["text"] for r in t["regions"]}
            for tid, t in truths.items()}
    return p_char(got, want)[0]


@pytest.fixture(scope="module")
def models(char_detector, chinese_classifier):
    return PipelineModels(char_detector=char_detector, chinese=chinese_classifier)


@pytest.fixture(scope="module")
def clean50(tmp_path_factory, atlas, space):
    d = tmp_path_factory.mktemp("accept_clean50")
    return make_corpus(atlas, space, NoiseSpec(), count=50, seed=41000, out_dir=d)


@pytest.fixture(scope="module")
def med200(tmp_path_factory, atlas, space):
    d = tmp_path_factory.mktemp("accept_med200")
    return make_corpus(atlas, space, NOISE_PRESETS["med"], count=200, seed=52000,
                       out_dir=d)


@pytest.fixture(scope="module")
def clean_run(tmp_path_factory, clean50, model_dir, models):
    """Oracle regions, trained glyph models, accept-everything threshold."""
    out = tmp_path_factory.mktemp("accept_clean_run")
    config = PipelineConfig(detector="oracle", tau=0.0, jobs=4,
                            model_path=str(model_dir / "detector.json"),
                            chinese_model_path=str(model_dir / "chinese.json"))
    t0 = time.monotonic()
    report = run_batch(clean50, config, out, models=models)
    return out, report, time.monotonic() - t0


class TestSuppressionOracle:
    def test_matches_greedy_oracle_within_budget(self):
        """1000 random instances of up to 50 boxes against a brute-force
        label-agnostic greedy reference."""
        def oracle(boxes, threshold):
            order = sorted(range(len(boxes)), key=lambda i: -boxes[i].score)
            kept = []
            for i in order:
                if all(iou(boxes[i].box, k.box) < threshold for k in kept):
                    kept.append(boxes[i])
            return kept

        rng = np.random.default_rng(1234)
        t0 = time.monotonic()
        for _ in range(1000):
            n = int(rng.integers(0, 51))
            boxes = []
            for _ in range(n):
                x0, y0 = rng.uniform(0, 90, size=2)
                boxes.append(ScoredBox(
                    box=BBox(x0, y0, x0 + rng.uniform(1, 25), y0 + rng.uniform(1, 25)),
                    label=str(rng.integers(0, 8)),
                    score=float(np.round(rng.uniform(), 3))))
            got = lucnms(boxes, 0.3)
            want = oracle(boxes, 0.3)
            assert set(got) == set(want)
            assert [b.score for b in got] == sorted((b.score for b in got), reverse=True)
        assert time.monotonic() - t0 < 10.0


class TestLossOracle:
    def test_dice_hand_fixtures_exact(self):
        fixtures = [
            (np.array([1.0, 1.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0, 0.0]),
             1.0 - 2.0 / (3.0 + DICE_EPS)),
            (np.array([0.5, 0.5]), np.array([1.0, 0.0]),
             1.0 - 1.0 / (1.5 + DICE_EPS)),
            (np.ones(6), np.ones(6), 1.0 - 12.0 / (12.0 + DICE_EPS)),
            (np.zeros(4), np.ones(4), 1.0 - 0.0 / (4.0 + DICE_EPS)),
        ]
        for p, g, expected in fixtures:
            assert abs(dice_loss(p, g) - expected) <= 1e-9

    def test_combined_loss_identity_random_weights(self):
        rng = np.random.default_rng(77)
        for _ in range(200):
            lt, lk, la, ld = rng.random(4)
            alpha, beta = rng.random(2) * 3
            rep = combined_loss(lt, lk, la, ld, alpha=alpha, beta=beta)
            assert abs(rep.l_total - (lt + alpha * lk + beta * (la + ld))) <= 1e-12


class TestAggregationOracle:
    def test_partition_and_region_count(self):
        """200 random text/kernel mask pairs: the output is a disjoint
        partition of reachable text pixels and the region count equals the
        number of kernel connected components."""
        from scipy import ndimage
        four = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
        rng = np.random.default_rng(2024)
        for _ in range(200):
            h = int(rng.integers(6, 24))
            w = int(rng.integers(6, 32))
            text = rng.random((h, w)) > rng.uniform(0.35, 0.65)
            kernel = text & (rng.random((h, w)) > rng.uniform(0.4, 0.75))
            regions = aggregate_pixels(text, kernel)
            _, n_kernel = ndimage.label(kernel & text, structure=four)
            assert len(regions) == n_kernel
            union = np.zeros_like(text)
            for r in regions:
                assert not (union & r.mask).any()
                union |= r.mask
                assert not (r.mask & ~text).any()


class TestAnchorScheme:
    def test_sixteen_per_location(self):
        spec = AnchorSpec()
        assert spec.levels == (4.0, 8.0, 16.0, 32.0)
        assert spec.ratios == (0.8, 1.0, 1.2, 1.5)
        assert len(spec.levels) * len(spec.ratios) == 16
        anchors = generate_anchors(spec, 8, 8)
        assert len(anchors) == 16 * 8 * 8
        per_location: dict[tuple[float, float], int] = {}
        for a in anchors:
            key = (round(a.center[0], 6), round(a.center[1], 6))
            per_location[key] = per_location.get(key, 0) + 1
        assert len(per_location) == 8 * 8
        assert set(per_location.values()) == {16}


class TestCleanRoundTrip:
    def test_exact_recovery_within_budget(self, clean_run):
        out, report, elapsed = clean_run
        assert report.p_char == 1.0
        assert report.p_ticket == 1.0
        assert elapsed < 120.0


class TestNoisyCorpusFloor:
    def test_accuracy_floor_within_budget(self, tmp_path_factory, med200,
                                          model_dir, models):
        out = tmp_path_factory.mktemp("accept_med_run")
        config = PipelineConfig(detector="baseline", tau=0.0, jobs=8,
                                model_path=str(model_dir / "detector.json"),
                                chinese_model_path=str(model_dir / "chinese.json"))
        t0 = time.monotonic()
        report = run_batch(med200, config, out, models=models)
        elapsed = time.monotonic() - t0
        assert not (out / "errors.json").exists()
        assert report.p_char >= 0.90
        assert report.p_ticket >= 0.85
        assert elapsed < 600.0


class TestSegmentationOrdering:
    def test_method_ranking_on_noisy_regions(self, med200, char_detector):
        """Pooled segmentation F1 over medium-noise region crops must rank
        the full route above the projection baseline above the
        connected-component baseline."""
        from ftr.detect import TextRegion, crop_regions
        truths = read_truths(med200)
        counts = {m: [0, 0, 0] for m in ("pipeline", "projection", "cc")}  # tp fp fn
        for tid in sorted(truths)[:25]:
            truth = truths[tid]
            from PIL import Image
            image = np.asarray(Image.open(med200 / "tickets" / f"{tid}.png").convert("L"))
            for r in truth["regions"]:
                region = TextRegion(id=r["id"], bbox=BBox(*r["bbox"]), mask=None,
                                    score=1.0)
                crop = crop_regions(image, [region])[0]
                want = []
                for c in r["chars"]:
                    b = BBox(*c["bbox"])
                    want.append(BBox((b.x_min - crop.offset[0]) * crop.scale,
                                     (b.y_min - crop.offset[1]) * crop.scale,
                                     (b.x_max - crop.offset[0]) * crop.scale,
                                     (b.y_max - crop.offset[1]) * crop.scale))
                outputs = {
                    "pipeline": segment_region(crop.image, char_detector).all_boxes(),
                    "projection": [s.box for s in projection_segment(crop.image)],
                    "cc": [s.box for s in cc_segment(crop.image)],
                }
                for m, got in outputs.items():
                    tp = len(match_boxes(got, want))
                    counts[m][0] += tp
                    counts[m][1] += len(got) - tp
                    counts[m][2] += len(want) - tp
        f1 = {}
        for m, (tp, fp, fn) in counts.items():
            prec = tp / (tp + fp) if tp + fp else 1.0
            rec = tp / (tp + fn) if tp + fn else 1.0
            f1[m] = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        assert f1["pipeline"] > f1["projection"] > f1["cc"], f1

    def test_component_baseline_fragments_split_glyph(self, atlas):
        img, boxes, _ = line_crop(atlas, split_label(atlas))
        assert len(boxes) == 1
        assert len(cc_segment(img)) >= 2

    def test_component_baseline_dilation_merges_neighbors(self, atlas):
        from ftr.synth import identity_point
        tight = dataclasses.replace(identity_point(), spacing=1)
        img, boxes, _ = line_crop(atlas, "83", point=tight)
        assert len(cc_segment(img, dilate=3)) < len(boxes)


class TestThresholdSweepShape:
    def test_monotone_and_error_free_point(self, chinese_classifier, line_dataset,
                                           atlas):
        samples = [(s.image, s.label) for s in line_dataset.subset("val")
                   if atlas.scripts[s.label] == "chinese"]
        assert samples
        taus = [float(t) for t in np.linspace(0.0, 0.999, 25)]
        curve = sweep_thresholds(chinese_classifier, samples, taus)
        acc = [p.accepted_count for p in curve.points]
        err = [p.error_count for p in curve.points]
        rec = [p.recall for p in curve.points]
        assert acc == sorted(acc, reverse=True)
        assert err == sorted(err, reverse=True)
        assert rec == sorted(rec, reverse=True)
        assert any(p.error_count == 0 for p in curve.points if p.threshold < 1.0)


class TestClassifierQuality:
    def test_held_out_accuracy_and_confidence_mass(self, chinese_classifier,
                                                   line_dataset, atlas):
        samples = [(s.image, s.label) for s in line_dataset.subset("val")
                   if atlas.scripts[s.label] == "chinese"]
        assert len({l for _, l in samples}) == 200
        correct = 0
        for image, label in samples:
            pred = classify(chinese_classifier, normalize_glyph(image),
                            top_k=len(chinese_classifier.labels))
            correct += pred.top1[0] == label
            assert abs(sum(c for _, c in pred.candidates) - 1.0) <= 1e-9
        assert correct / len(samples) >= 0.98


class TestMetricsOracle:
    def test_literal_recounts_exact(self):
        rng = np.random.default_rng(31)
        chars = list("abc甲乙")
        for _ in range(200):
            truth = {}
            results = {}
            required = {}
            for t in range(int(rng.integers(1, 11))):  # at most 10 tickets
                tid = f"t{t}"
                truth[tid] = {}
                results[tid] = {}
                for r in range(int(rng.integers(1, 5))):
                    rid = f"r{r}"
                    s = "".join(rng.choice(chars, size=int(rng.integers(1, 6))))
                    truth[tid][rid] = s
                    results[tid][rid] = s if rng.random() < 0.7 else s + "!"
                required[tid] = sorted(truth[tid])
            ratio_c, rc, nc = p_char(results, truth)
            n_correct = sum(1 for tid in truth for rid in truth[tid]
                            if results[tid][rid] == truth[tid][rid])
            n_total = sum(len(v) for v in truth.values())
            assert (rc, nc) == (n_correct, n_total)
            assert ratio_c == n_correct / n_total
            ratio_t, rt, nt = p_ticket(results, truth, required)
            n_ok = sum(1 for tid in truth
                       if all(results[tid][k] == truth[tid][k] for k in required[tid]))
            assert (rt, nt) == (n_ok, len(truth))
            assert ratio_t == n_ok / len(truth)


class TestDeterministicParallelism:
    def test_jobs_1_vs_8_byte_identical(self, tmp_path_factory, atlas, space,
                                        model_dir, models):
        corpus = make_corpus(atlas, space, NOISE_PRESETS["med"], count=20,
                             seed=63000,
                             out_dir=tmp_path_factory.mktemp("accept_det_corpus"))
        outs = []
        for jobs in (1, 8):
            out = tmp_path_factory.mktemp(f"accept_det_{jobs}")
            config = PipelineConfig(detector="baseline", tau=0.9, jobs=jobs,
                                    model_path=str(model_dir / "detector.json"),
                                    chinese_model_path=str(model_dir / "chinese.json"))
            run_batch(corpus, config, out, models=models)
            outs.append(out)
        a, b = outs
        names_a = sorted(p.name for p in (a / "results").glob("*.json"))
        names_b = sorted(p.name for p in (b / "results").glob("*.json"))
        assert names_a == names_b
        for name in names_a:
            assert (a / "results" / name).read_bytes() == (b / "results" / name).read_bytes()
        assert (a / "queue.jsonl").read_bytes() == (b / "queue.jsonl").read_bytes()
        assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


class TestCorrectionLoopClosesGap:
    def test_ground_truth_corrections_reach_reference_accuracy(
            self, tmp_path_factory, clean50, model_dir, models, clean_run):
        _, reference_report, _ = clean_run
        out = tmp_path_factory.mktemp("accept_correct")
        config = PipelineConfig(detector="oracle", tau=HIGH_TAU, jobs=4,
                                model_path=str(model_dir / "detector.json"),
                                chinese_model_path=str(model_dir / "chinese.json"))
        run_batch(clean50, config, out, models=models)
        truths = read_truths(clean50)
        queue = load_queue(out)
        assert queue  # the extreme threshold must defer glyphs for review
        before = corpus_p_char(out, truths)
        assert before < reference_report.p_char
        for item in queue.values():
            region = next(r for r in truths[item.ticket_id]["regions"]
                          if r["id"] == item.region_id)
            apply_correction(out, item.id, region["text"][item.char_index])
        after = corpus_p_char(out, truths)
        assert after == reference_report.p_char
