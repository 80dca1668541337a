import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from osodkit.errors import EmptyVectorError
from osodkit.nan import active_count, l1_norm, nan_score, nan_scores
from oracles import naive_nan_score


class TestL1Norm:
    def test_zero_vector(self):
        assert l1_norm([0, 0, 0]) == 0.0

    def test_hand_example(self):
        assert l1_norm([2, -1, 0, 3]) == 6.0

    def test_single_negative(self):
        assert l1_norm([-5]) == 5.0

    def test_empty_raises(self):
        with pytest.raises(EmptyVectorError):
            l1_norm([])


class TestActiveCount:
    def test_zero_counts_as_inactive(self):
        assert active_count([2, -1, 0, 3]) == 2

    def test_all_positive(self):
        assert active_count(np.ones(17)) == 17

    def test_all_nonpositive(self):
        assert active_count([-1.0, 0.0, -3.5]) == 0

    def test_empty_raises(self):
        with pytest.raises(EmptyVectorError):
            active_count([])


class TestNanScore:
    def test_hand_example(self):
        assert nan_score([2, -1, 0, 3]) == 3.0

    def test_no_active_components_scores_zero(self):
        assert nan_score([-1, -2]) == 0.0
        assert nan_score(np.zeros(8)) == 0.0

    def test_scale(self):
        assert nan_score([1, 1]) == 1.0
        assert nan_score([2, 2]) == 2.0

    def test_empty_raises(self):
        with pytest.raises(EmptyVectorError):
            nan_score([])

    def test_oracle_equivalence(self):
        # 1000 random mixed-sign vectors, dims 1..512, vs the naive loop.
        rng = np.random.default_rng(42)
        for _ in range(1000):
            dim = int(rng.integers(1, 513))
            z = rng.normal(scale=rng.uniform(0.1, 10.0), size=dim)
            got = nan_score(z)
            want = naive_nan_score(z)
            assert abs(got - want) <= 1e-12 * max(1.0, abs(want))

    def test_permutation_invariance_and_scale_equivariance(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            dim = int(rng.integers(2, 257))
            z = rng.normal(size=dim)
            perm = rng.permutation(dim)
            c = float(rng.uniform(0.01, 100.0))
            base = nan_score(z)
            assert abs(nan_score(z[perm]) - base) <= 1e-12 * max(1.0, abs(base))
            if active_count(z) > 0:
                scaled = nan_score(c * z)
                assert abs(scaled - c * base) <= 1e-12 * max(1.0, abs(c * base))

    def test_nonnegative(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            assert nan_score(rng.normal(size=16)) >= 0.0

    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=32),
                    min_size=1, max_size=64))
    def test_total_finite_nonnegative(self, vals):
        score = nan_score(vals)
        assert score >= 0.0
        assert math.isfinite(score)


class TestNanScores:
    def test_matches_scalar_version(self):
        rng = np.random.default_rng(11)
        Z = rng.normal(size=(50, 32))
        Z[0] = -np.abs(Z[0])  # force a zero-active row
        batch = nan_scores(Z)
        for i in range(Z.shape[0]):
            assert batch[i] == nan_score(Z[i])
