import numpy as np
import pytest

from osodkit.calibration import (
    DEFAULT_GRID,
    calibrate,
    choose_threshold,
    combined_metric,
)
from osodkit.estimators import RandomForestConfig, train_random_forest
from osodkit.labeling import build_training_set
from osodkit.synth import SynthConfig, generate
from oracles import argmax_smallest, combined_metric_brute


class TestCombinedMetric:
    def test_hand_example(self):
        s = combined_metric([0.5, 0.4], [0.2, 0.4])
        assert s.tolist() == [1.5, 1.8]

    def test_shared_max_gives_two(self):
        s = combined_metric([0.2, 0.5], [0.1, 0.3])
        assert s[1] == 2.0
        assert s.max() == 2.0

    def test_constant_vectors_all_two(self):
        s = combined_metric([0.3, 0.3, 0.3], [0.7, 0.7, 0.7])
        assert s.tolist() == [2.0, 2.0, 2.0]

    def test_all_zero_vector_drops_term(self):
        with pytest.warns(UserWarning):
            s = combined_metric([0.0, 0.0], [0.1, 0.2])
        assert s.tolist() == [0.5, 1.0]

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        m = rng.uniform(0.1, 1, 10)
        r = rng.uniform(0.1, 1, 10)
        base = combined_metric(m, r)
        scaled = combined_metric(m * 3.7, r)
        assert np.argmax(base) == np.argmax(scaled)
        assert np.allclose(base, scaled)


class TestChooseThreshold:
    def test_brute_force_argmax_on_random_nonmonotone_curves(self):
        rng = np.random.default_rng(42)
        grid = list(DEFAULT_GRID)
        for _ in range(100):
            m = rng.uniform(0, 1, len(grid)).tolist()
            r = rng.uniform(0, 1, len(grid)).tolist()
            chosen, combined = choose_threshold(grid, m, r)
            want = argmax_smallest(grid, combined_metric_brute(m, r))
            assert chosen == want

    def test_tie_breaks_to_smallest(self):
        grid = (0.0, 0.5, 1.0)
        chosen, _ = choose_threshold(grid, [0.5, 0.5, 0.5], [0.2, 0.2, 0.2])
        assert chosen == 0.0


def small_synth(seed, **overrides):
    cfg = SynthConfig(
        n_images=overrides.pop("n_images", 10),
        queries_per_image=overrides.pop("queries_per_image", 60),
        feat_dim=16,
        seed=seed,
        **overrides,
    )
    return generate(cfg)


def quick_model(result, seed=1, n_trees=20):
    X, y = build_training_set(result.dump, result.dataset)
    return train_random_forest(X, y, RandomForestConfig(n_trees=n_trees), seed=seed)


class TestCalibrate:
    def test_chosen_is_on_grid_and_deterministic(self):
        train = small_synth(50)
        pretest = small_synth(51)
        model = quick_model(train)
        c1 = calibrate(pretest.dump, pretest.dataset, model, top_k=20,
                       class_ids=range(1, 9))
        c2 = calibrate(pretest.dump, pretest.dataset, model, top_k=20,
                       class_ids=range(1, 9))
        assert c1.chosen in c1.thresholds
        assert c1.to_dict() == c2.to_dict()

    def test_curve_shape_monotone_directions(self):
        # Known mAP can only lose low-confidence detections as the
        # threshold rises; unknown recall can only gain them.
        train = small_synth(52)
        pretest = small_synth(53)
        model = quick_model(train)
        curve = calibrate(pretest.dump, pretest.dataset, model, top_k=20,
                          class_ids=range(1, 9))
        maps = np.array(curve.map_known)
        rus = np.array(curve.recall_unknown)
        assert np.all(maps[1:] <= maps[:-1] + 1e-12)
        assert np.all(rus[1:] >= rus[:-1] - 1e-12)

    def test_no_unknown_gt_flags_and_uses_map_only(self):
        train = small_synth(54)
        pretest = small_synth(55, unknown_fraction=0.0)
        assert all(
            gt.is_known
            for gts in pretest.dataset.ground_truths.values()
            for gt in gts
        )
        model = quick_model(train)
        curve = calibrate(pretest.dump, pretest.dataset, model, top_k=20,
                          class_ids=range(1, 9))
        assert curve.recall_all_zero
        maps = np.array(curve.map_known)
        expected = DEFAULT_GRID[int(np.argmax(maps / maps.max()))]
        assert curve.chosen == expected

    def test_worker_count_stable(self):
        train = small_synth(56)
        pretest = small_synth(57, n_images=6)
        model = quick_model(train, n_trees=10)
        c1 = calibrate(pretest.dump, pretest.dataset, model, top_k=20,
                       class_ids=range(1, 9), workers=1)
        c4 = calibrate(pretest.dump, pretest.dataset, model, top_k=20,
                       class_ids=range(1, 9), workers=4)
        assert c1.to_dict() == c4.to_dict()

    def test_empty_pretest_rejected(self):
        from osodkit.ingest import FeatureDump

        train = small_synth(58)
        model = quick_model(train, n_trees=5)
        with pytest.raises(ValueError):
            calibrate(FeatureDump(), train.dataset, model)

    def test_plot_columns_format(self):
        train = small_synth(59, n_images=6)
        pretest = small_synth(60, n_images=4)
        model = quick_model(train, n_trees=5)
        curve = calibrate(pretest.dump, pretest.dataset, model, top_k=20,
                          class_ids=range(1, 9))
        text = curve.plot_columns()
        lines = text.strip().splitlines()
        assert lines[0].startswith("#")
        assert len(lines) == 1 + len(DEFAULT_GRID)
        assert all(len(line.split()) == 4 for line in lines[1:])
