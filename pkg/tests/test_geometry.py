import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ftr.geometry import (AnchorSpec, BBox, ScoredBox, generate_anchors, iou,
                          lucnms, standard_nms)


def box(x0, y0, x1, y1):
    return BBox(float(x0), float(y0), float(x1), float(y1))


coords = st.floats(min_value=-100, max_value=100, allow_nan=False)


@st.composite
def bboxes(draw):
    x0 = draw(coords)
    y0 = draw(coords)
    w = draw(st.floats(min_value=0.1, max_value=50))
    h = draw(st.floats(min_value=0.1, max_value=50))
    return BBox(x0, y0, x0 + w, y0 + h)


class TestBBox:
    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            BBox(0, 0, 0, 1)
        with pytest.raises(ValueError):
            BBox(0, 2, 1, 1)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            BBox(0, 0, math.inf, 1)
        with pytest.raises(ValueError):
            BBox(math.nan, 0, 1, 1)

    def test_score_bounds(self):
        with pytest.raises(ValueError):
            ScoredBox(box=box(0, 0, 1, 1), label="a", score=1.5)


class TestIoU:
    def test_identity(self):
        b = box(0, 0, 1, 1)
        assert iou(b, b) == 1.0

    def test_disjoint(self):
        assert iou(box(0, 0, 1, 1), box(2, 2, 3, 3)) == 0.0

    def test_hand_value(self):
        # intersection 2, union 6
        assert iou(box(0, 0, 2, 2), box(1, 0, 3, 2)) == pytest.approx(1 / 3)

    @given(bboxes(), bboxes())
    @settings(max_examples=200, deadline=None)
    def test_symmetric_and_bounded(self, a, b):
        v = iou(a, b)
        assert 0.0 <= v <= 1.0
        assert v == pytest.approx(iou(b, a))

    @given(bboxes())
    @settings(max_examples=100, deadline=None)
    def test_self_is_one(self, a):
        assert iou(a, a) == pytest.approx(1.0)


def brute_force_greedy(boxes, threshold):
    """Oracle: sort by score (stable), keep a box iff no previously kept box
    overlaps it >= threshold, ignoring labels."""
    order = sorted(range(len(boxes)), key=lambda i: -boxes[i].score)
    kept = []
    for i in order:
        if all(iou(boxes[i].box, k.box) < threshold for k in kept):
            kept.append(boxes[i])
    return kept


def random_instance(rng, n_max=50):
    n = int(rng.integers(0, n_max + 1))
    out = []
    for _ in range(n):
        x0 = rng.uniform(0, 80)
        y0 = rng.uniform(0, 80)
        out.append(ScoredBox(
            box=BBox(x0, y0, x0 + rng.uniform(1, 20), y0 + rng.uniform(1, 20)),
            label=str(rng.integers(0, 5)),
            score=float(np.round(rng.uniform(), 3))))
    return out


class TestStandardNMS:
    def test_single_box(self):
        b = [ScoredBox(box=box(0, 0, 2, 2), label="a", score=0.9)]
        assert standard_nms(b, 0.3) == b

    def test_different_labels_coexist(self):
        a = ScoredBox(box=box(0, 0, 10, 10), label="a", score=0.9)
        b = ScoredBox(box=box(0.5, 0, 10.5, 10), label="b", score=0.8)
        assert iou(a.box, b.box) > 0.8
        assert set(standard_nms([a, b], 0.3)) == {a, b}

    def test_same_label_suppressed(self):
        a = ScoredBox(box=box(0, 0, 10, 10), label="a", score=0.9)
        b = ScoredBox(box=box(2, 0, 12, 10), label="a", score=0.8)
        assert iou(a.box, b.box) >= 0.3
        assert standard_nms([a, b], 0.3) == [a]

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            standard_nms([], 0.0)
        with pytest.raises(ValueError):
            standard_nms([], 1.0)


class TestLUCNMS:
    def test_empty(self):
        assert lucnms([], 0.3) == []

    def test_single_box(self):
        b = [ScoredBox(box=box(0, 0, 2, 2), label="a", score=0.9)]
        assert lucnms(b, 0.3) == b

    def test_cross_label_suppression(self):
        a = ScoredBox(box=box(0, 0, 10, 10), label="a", score=0.9)
        b = ScoredBox(box=box(2, 0, 12, 10), label="b", score=0.8)
        assert lucnms([a, b], 0.3) == [a]
        assert set(standard_nms([a, b], 0.3)) == {a, b}

    def test_chain(self):
        a = ScoredBox(box=box(0, 0, 10, 10), label="a", score=0.9)
        b = ScoredBox(box=box(5, 0, 15, 10), label="b", score=0.8)
        c = ScoredBox(box=box(10, 0, 20, 10), label="c", score=0.7)
        assert iou(a.box, b.box) >= 0.3 and iou(b.box, c.box) >= 0.3
        assert iou(a.box, c.box) < 0.3
        assert lucnms([a, b, c], 0.3) == [a, c]

    def test_tie_broken_by_input_order(self):
        a = ScoredBox(box=box(0, 0, 10, 10), label="a", score=0.8)
        b = ScoredBox(box=box(1, 0, 11, 10), label="b", score=0.8)
        assert lucnms([a, b], 0.3) == [a]
        assert lucnms([b, a], 0.3) == [b]

    def test_output_sorted_by_score(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            boxes = random_instance(rng)
            out = lucnms(boxes, 0.3)
            assert [s.score for s in out] == sorted((s.score for s in out), reverse=True)

    def test_kept_pairwise_non_overlapping(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            out = lucnms(random_instance(rng), 0.3)
            for i, a in enumerate(out):
                for b in out[i + 1:]:
                    assert iou(a.box, b.box) < 0.3

    def test_oracle_equivalence(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            boxes = random_instance(rng)
            assert set(lucnms(boxes, 0.3)) == set(brute_force_greedy(boxes, 0.3))

    def test_label_collapse_matches_standard_nms(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            boxes = random_instance(rng)
            collapsed = [ScoredBox(box=s.box, label="x", score=s.score) for s in boxes]
            assert lucnms(collapsed, 0.3) == standard_nms(collapsed, 0.3)


class TestAnchors:
    def test_default_sixteen_per_location(self):
        spec = AnchorSpec()
        assert spec.levels == (4.0, 8.0, 16.0, 32.0)
        assert spec.ratios == (0.8, 1.0, 1.2, 1.5)
        anchors = generate_anchors(spec, 4, 4)
        assert len(anchors) == 16 * 4 * 4  # stride 1 => 16 locations

    def test_count_formula(self):
        spec = AnchorSpec(levels=(4, 8), ratios=(1.0, 2.0, 0.5), stride=2.0)
        anchors = generate_anchors(spec, 10, 6)
        assert len(anchors) == (10 // 2) * (6 // 2) * 2 * 3

    def test_square_at_ratio_one(self):
        spec = AnchorSpec(levels=(8.0,), ratios=(1.0,), stride=8.0)
        a = generate_anchors(spec, 8, 8)[0]
        assert a.width == pytest.approx(8.0)
        assert a.height == pytest.approx(8.0)

    def test_area_preserving_shape(self):
        spec = AnchorSpec(levels=(4.0,), ratios=(0.8,), stride=4.0)
        a = generate_anchors(spec, 4, 4)[0]
        assert a.width == pytest.approx(4 * math.sqrt(0.8))
        assert a.height == pytest.approx(4 / math.sqrt(0.8))
        assert a.area == pytest.approx(16.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            AnchorSpec(levels=(), ratios=(1.0,))
        with pytest.raises(ValueError):
            AnchorSpec(levels=(-4.0,), ratios=(1.0,))
        with pytest.raises(ValueError):
            generate_anchors(AnchorSpec(stride=8.0), 4, 4)
