import numpy as np
import pytest

from osodkit.datamodel import Box, GroundTruth, ImageMeta, QueryOutput
from osodkit.errors import MissingImageError
from osodkit.ingest import AnnotatedDataset, DumpRecord, FeatureDump
from osodkit.labeling import assign_labels, build_training_set, greedy_match
from osodkit.synth import SynthConfig, generate
from oracles import lexicographic_match

META = ImageMeta("img", 100, 100)


def query_at(box, conf=0.5, n_classes=3):
    cls = [conf * 0.5] * n_classes
    cls[0] = conf
    return QueryOutput(feat=(1.0, -1.0), cls=tuple(cls), box=box)


def clustered_scene(rng, n_gts, n_queries):
    """Boxes drawn around shared anchors so overlaps are common."""
    anchors = rng.uniform(0.25, 0.75, size=(3, 2))

    def sample_box():
        ax, ay = anchors[rng.integers(0, len(anchors))]
        cx = float(np.clip(ax + rng.normal(0, 0.04), 0.05, 0.95))
        cy = float(np.clip(ay + rng.normal(0, 0.04), 0.05, 0.95))
        w = float(rng.uniform(0.1, 0.3))
        h = float(rng.uniform(0.1, 0.3))
        return Box(cx, cy, min(w, 1.0), min(h, 1.0))

    gts = [sample_box() for _ in range(n_gts)]
    queries = [sample_box() for _ in range(n_queries)]
    return gts, queries


class TestAssignLabels:
    def test_no_ground_truth_all_background(self):
        queries = [query_at(Box(0.5, 0.5, 0.2, 0.2)) for _ in range(5)]
        examples = assign_labels(queries, [], META)
        assert all(ex.label == 0 and ex.matched_gt is None for ex in examples)

    def test_single_match(self):
        gt = GroundTruth(Box(0.5, 0.5, 0.2, 0.2), class_id=1)
        q = query_at(Box(0.5, 0.5, 0.2, 0.22))  # IoU ~0.9
        examples = assign_labels([q], [gt], META, iou_threshold=0.5)
        assert examples[0].label == 1
        assert examples[0].matched_gt == 0

    def test_one_to_one_picks_highest_iou(self):
        gt = GroundTruth(Box(0.5, 0.5, 0.2, 0.2), class_id=1)
        strong = query_at(Box(0.5, 0.5, 0.2, 0.25))  # IoU 0.8
        weak = query_at(Box(0.5, 0.5, 0.2, 0.33))   # IoU ~0.6
        examples = assign_labels([weak, strong], [gt], META, iou_threshold=0.5)
        assert [ex.label for ex in examples] == [0, 1]

    def test_unknown_gt_counts_as_positive(self):
        gt = GroundTruth(Box(0.5, 0.5, 0.2, 0.2), class_id=None)
        q = query_at(Box(0.5, 0.5, 0.2, 0.2))
        examples = assign_labels([q], [gt], META)
        assert examples[0].label == 1

    def test_threshold_monotonicity(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            gts_boxes, q_boxes = clustered_scene(rng, 4, 6)
            gts = [GroundTruth(b, class_id=1) for b in gts_boxes]
            queries = [query_at(b, conf=float(rng.uniform(0, 1))) for b in q_boxes]
            positives = []
            for thr in (0.2, 0.35, 0.5, 0.65, 0.8):
                ex = assign_labels(queries, gts, META, iou_threshold=thr)
                positives.append(sum(e.label for e in ex))
            assert positives == sorted(positives, reverse=True)

    def test_deterministic(self):
        rng = np.random.default_rng(22)
        gts_boxes, q_boxes = clustered_scene(rng, 3, 8)
        gts = [GroundTruth(b, class_id=1) for b in gts_boxes]
        queries = [query_at(b) for b in q_boxes]
        a = assign_labels(queries, gts, META)
        b = assign_labels(queries, gts, META)
        assert a == b

    def test_at_most_one_positive_per_gt(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            gts_boxes, q_boxes = clustered_scene(rng, 5, 5)
            gts = [GroundTruth(b, class_id=1) for b in gts_boxes]
            queries = [query_at(b) for b in q_boxes]
            examples = assign_labels(queries, gts, META, iou_threshold=0.3)
            matched = [ex.matched_gt for ex in examples if ex.label == 1]
            assert len(matched) == len(set(matched))
            assert len(matched) <= min(len(gts), len(queries))


class TestGreedyMatcherOracle:
    def test_agrees_with_exhaustive_assignment(self):
        # 200 clustered micro-scenes, up to 6 boxes per side.
        rng = np.random.default_rng(99)
        checked = 0
        for _ in range(200):
            n_rows = int(rng.integers(1, 7))
            n_cols = int(rng.integers(1, 7))
            gts_boxes, q_boxes = clustered_scene(rng, n_rows, n_cols)
            from osodkit.labeling import iou_matrix

            ious = iou_matrix(gts_boxes, q_boxes, META)
            thr = float(rng.uniform(0.15, 0.6))
            got = greedy_match(ious, thr)
            want = lexicographic_match(ious.tolist(), thr)
            assert got == want
            checked += 1
        assert checked == 200


class TestBuildTrainingSet:
    def test_empty_dump(self):
        dump = FeatureDump()
        dataset = AnnotatedDataset(images=[], ground_truths={}, known_categories={1: "a"})
        X, y = build_training_set(dump, dataset)
        assert X.shape == (0, 5)
        assert y.shape == (0,)

    def test_missing_image_error(self):
        rec = DumpRecord(meta=META, queries=(query_at(Box(0.5, 0.5, 0.1, 0.1)),))
        dump = FeatureDump.from_records([rec])
        dataset = AnnotatedDataset(images=[], ground_truths={}, known_categories={1: "a"})
        with pytest.raises(MissingImageError):
            build_training_set(dump, dataset)

    def test_row_count_and_planted_labels(self):
        result = generate(SynthConfig(n_images=8, queries_per_image=40, seed=17))
        X, y = build_training_set(result.dump, result.dataset)
        assert X.shape == (8 * 40, 5)
        # Planted object queries coincide with their GT at IoU >= 0.7, so
        # the matcher must recover the plan for (nearly) every query.
        planted = np.array(
            [role in ("known", "unknown") for roles in result.planted_roles for role in roles],
            dtype=int,
        )
        agreement = float((planted == y).mean())
        assert agreement >= 0.99

    def test_worker_count_does_not_change_result(self):
        result = generate(SynthConfig(n_images=6, queries_per_image=30, seed=18))
        X1, y1 = build_training_set(result.dump, result.dataset, workers=1)
        X4, y4 = build_training_set(result.dump, result.dataset, workers=4)
        assert np.array_equal(X1, X4)
        assert np.array_equal(y1, y4)

    def test_bench_scale_one_row_per_query(self):
        # 504 images x 300 queries, the scale of the small training corpus
        # this pipeline is meant for
        result = generate(SynthConfig(n_images=504, queries_per_image=300,
                                      feat_dim=8, seed=19))
        X, y = build_training_set(result.dump, result.dataset)
        assert X.shape == (504 * 300, 5)
        assert y.shape == (504 * 300,)
