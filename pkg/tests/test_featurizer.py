import numpy as np
import pytest

from osodkit.datamodel import Box, ImageMeta, QueryOutput
from osodkit.errors import EmptyVectorError
from osodkit.featurizer import (
    FEATURE_NAMES,
    apply_mask,
    box_geometry,
    featurize,
    mask_without,
    max_confidence,
)

META = ImageMeta("img", 100, 100)


class TestMaxConfidence:
    def test_basic(self):
        assert max_confidence([0.1, 0.9, 0.3]) == 0.9

    def test_all_zero(self):
        assert max_confidence(np.zeros(80)) == 0.0

    def test_single(self):
        assert max_confidence([0.5]) == 0.5

    def test_empty_raises(self):
        with pytest.raises(EmptyVectorError):
            max_confidence([])


class TestBoxGeometry:
    def test_centered_box(self):
        s, dc, de = box_geometry(Box(0.5, 0.5, 0.2, 0.2), META)
        assert s == pytest.approx(0.04, rel=1e-12)
        assert dc == 0.5
        assert de == pytest.approx(0.4, rel=1e-12)

    def test_full_image_box(self):
        s, dc, de = box_geometry(Box(0.5, 0.5, 1.0, 1.0), META)
        assert s == 1.0
        assert dc == 0.5
        assert de == 0.0

    def test_corner_centered_box(self):
        s, dc, de = box_geometry(Box(0.0, 0.0, 0.1, 0.1), META)
        assert dc == 0.0
        assert de == 0.0  # box sticks out past the boundary; clamped

    def test_ranges(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            box = Box(*rng.uniform(0, 1, 4))
            s, dc, de = box_geometry(box, META)
            assert 0.0 <= s <= 1.0
            assert 0.0 <= dc <= 0.5
            assert 0.0 <= de <= 0.5


class TestFeaturize:
    def test_composed_hand_example(self):
        q = QueryOutput(feat=(2, -1, 0, 3), cls=(0.1, 0.9), box=Box(0.5, 0.5, 0.2, 0.2))
        f = featurize(q, META)
        assert f.f_nan == 3.0
        assert f.p_conf == 0.9
        assert f.s_box == pytest.approx(0.04, rel=1e-12)
        assert f.d_center == 0.5
        assert f.d_edge == pytest.approx(0.4, rel=1e-12)

    def test_all_nonpositive_feat(self):
        q = QueryOutput(feat=(-1.0, -2.0), cls=(0.3,), box=Box(0.5, 0.5, 0.2, 0.2))
        assert featurize(q, META).f_nan == 0.0

    def test_zero_area_box(self):
        q = QueryOutput(feat=(1.0,), cls=(0.3,), box=Box(0.5, 0.5, 0.0, 0.3))
        assert featurize(q, META).s_box == 0.0

    def test_deterministic_and_invariant_satisfying(self):
        rng = np.random.default_rng(9)
        for _ in range(300):
            q = QueryOutput(
                feat=tuple(rng.normal(size=8)),
                cls=tuple(rng.uniform(0, 1, 5)),
                box=Box(*rng.uniform(0, 1, 4)),
            )
            f1 = featurize(q, META)
            f2 = featurize(q, META)
            assert f1 == f2
            vec = f1.as_vector()
            assert np.isfinite(vec).all()
            assert 0.0 <= f1.p_conf <= 1.0
            assert 0.0 <= f1.s_box <= 1.0
            assert 0.0 <= f1.d_center <= 0.5
            assert 0.0 <= f1.d_edge <= 0.5
            assert f1.f_nan >= 0.0

    def test_vector_ordering_is_documented_order(self):
        q = QueryOutput(feat=(2, -1, 0, 3), cls=(0.1, 0.9), box=Box(0.5, 0.5, 0.2, 0.2))
        f = featurize(q, META)
        vec = f.as_vector()
        by_name = [getattr(f, n) for n in FEATURE_NAMES]
        assert list(vec) == by_name

    def test_batch_path_matches_scalar_path_bitwise(self):
        from osodkit.featurizer import featurize_queries

        rng = np.random.default_rng(31)
        queries = [
            QueryOutput(
                feat=tuple(rng.normal(size=12)),
                cls=tuple(rng.uniform(0, 1, 4)),
                box=Box(*rng.uniform(0, 1, 4)),
            )
            for _ in range(200)
        ]
        X = featurize_queries(queries, META)
        for i, q in enumerate(queries):
            assert np.array_equal(X[i], featurize(q, META).as_vector())


class TestMasking:
    def test_mask_without(self):
        assert mask_without("f_nan") == (False, True, True, True, True)
        assert mask_without("s_box", "d_edge") == (True, True, False, True, False)

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            mask_without("nonexistent")

    def test_apply_mask_zeroes_columns(self):
        X = np.arange(10.0).reshape(2, 5)
        out = apply_mask(X, mask_without("p_conf"))
        assert (out[:, 1] == 0.0).all()
        assert (out[:, 0] == X[:, 0]).all()
        # unmasked input is returned unchanged
        assert apply_mask(X, None) is X
