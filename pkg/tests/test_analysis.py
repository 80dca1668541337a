import numpy as np
import pytest
from scipy import stats

from osodkit.analysis import (
    assign_roles,
    kde,
    separation_report,
    silverman_bandwidth,
    wasserstein1,
)
from osodkit.errors import DegenerateSampleError, EmptySampleError
from osodkit.estimators import RandomForestConfig, train_random_forest
from osodkit.labeling import build_training_set
from osodkit.synth import RoleBands, SynthConfig, generate
from oracles import exhaustive_sorted_pairing_agree, transport_w1


class TestWasserstein1:
    def test_identity(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=50)
        assert wasserstein1(a, a) == 0.0

    def test_point_masses(self):
        assert wasserstein1([0.0], [1.0]) == 1.0

    def test_shifted_pairs(self):
        assert wasserstein1([0.0, 1.0], [1.0, 2.0]) == pytest.approx(1.0, abs=1e-15)

    def test_empty_raises(self):
        with pytest.raises(EmptySampleError):
            wasserstein1([], [1.0])

    def test_matches_scipy(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            a = rng.normal(size=int(rng.integers(1, 40)))
            b = rng.normal(loc=rng.uniform(-2, 2), size=int(rng.integers(1, 40)))
            want = stats.wasserstein_distance(a, b)
            assert wasserstein1(a, b) == pytest.approx(want, rel=1e-12, abs=1e-13)

    def test_transport_oracle_all_small_sizes(self):
        # Every (m, n) pair with both sides <= 8, random samples.
        rng = np.random.default_rng(2)
        for m in range(1, 9):
            for n in range(1, 9):
                for _ in range(4):
                    a = rng.uniform(-5, 5, m)
                    b = rng.uniform(-5, 5, n)
                    got = wasserstein1(a, b)
                    want = transport_w1(a.tolist(), b.tolist())
                    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_sorted_pairing_is_optimal_assignment(self):
        # Exhaustive justification for the oracle's sorted pairing.
        rng = np.random.default_rng(3)
        for n in range(2, 7):
            for _ in range(5):
                a = rng.uniform(-3, 3, n).tolist()
                b = rng.uniform(-3, 3, n).tolist()
                exhaustive, paired = exhaustive_sorted_pairing_agree(a, b)
                assert paired == pytest.approx(exhaustive, rel=1e-12, abs=1e-12)

    def test_metric_properties(self):
        rng = np.random.default_rng(4)
        for _ in range(500):
            size = lambda: int(rng.integers(1, 12))
            a = rng.normal(size=size())
            b = rng.normal(loc=rng.uniform(-1, 1), size=size())
            c = rng.normal(scale=rng.uniform(0.5, 2), size=size())
            dab = wasserstein1(a, b)
            dba = wasserstein1(b, a)
            dac = wasserstein1(a, c)
            dcb = wasserstein1(c, b)
            assert dab == pytest.approx(dba, rel=1e-12, abs=1e-15)
            assert dab >= 0.0
            assert wasserstein1(a, a) == 0.0
            assert dab <= dac + dcb + 1e-12

    def test_translation_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            a = rng.normal(size=10)
            b = rng.normal(size=14)
            shift = float(rng.uniform(-100, 100))
            assert wasserstein1(a + shift, b + shift) == pytest.approx(
                wasserstein1(a, b), rel=1e-9, abs=1e-12
            )


class TestKde:
    def test_symmetric_two_point_sample(self):
        curve = kde([-1.0, 1.0])
        assert np.allclose(curve.grid, -curve.grid[::-1], atol=1e-12)
        assert np.max(np.abs(curve.density - curve.density[::-1])) <= 1e-9

    def test_integrates_to_one(self):
        rng = np.random.default_rng(6)
        for sample in (rng.normal(size=1000), rng.uniform(0, 1, 500)):
            curve = kde(sample)
            integral = np.trapezoid(curve.density, curve.grid)
            assert abs(integral - 1.0) <= 1e-3

    def test_mode_near_zero_for_standard_normal(self):
        rng = np.random.default_rng(7)
        curve = kde(rng.normal(size=1000))
        mode = curve.grid[int(np.argmax(curve.density))]
        assert abs(mode) <= 0.15

    def test_density_nonnegative_and_grid_size(self):
        curve = kde(np.random.default_rng(8).normal(size=64))
        assert curve.grid.size == 512
        assert np.all(curve.density >= 0.0)

    def test_degenerate_sample_rejected(self):
        with pytest.raises(DegenerateSampleError):
            kde([2.0, 2.0, 2.0])

    def test_too_few_samples_rejected(self):
        with pytest.raises(EmptySampleError):
            kde([1.0])

    def test_silverman_value(self):
        samples = np.array([-1.0, 1.0])
        h = silverman_bandwidth(samples)
        sigma = np.std(samples, ddof=1)
        iqr = 1.0  # quartiles at -0.5 and 0.5
        assert h == pytest.approx(0.9 * min(sigma, iqr / 1.34) * 2 ** -0.2, rel=1e-12)

    def test_explicit_bandwidth_respected(self):
        curve = kde([0.0, 1.0, 2.0], bandwidth=0.5)
        assert curve.bandwidth == 0.5
        assert curve.grid[0] == pytest.approx(0.0 - 1.5)
        assert curve.grid[-1] == pytest.approx(2.0 + 1.5)


class TestRolesAndSeparation:
    def _setup(self, seed=30):
        result = generate(SynthConfig(n_images=10, queries_per_image=60,
                                      feat_dim=16, seed=seed))
        X, y = build_training_set(result.dump, result.dataset)
        model = train_random_forest(X, y, RandomForestConfig(n_trees=20), seed=3)
        return result, model

    def test_roles_partition_queries(self):
        result, _ = self._setup()
        roles = assign_roles(result.dump, result.dataset)
        for rec, rec_roles in zip(result.dump.records, roles):
            assert len(rec_roles) == len(rec.queries)
            assert set(rec_roles) <= {"background", "known", "unknown"}

    def test_roles_recover_plan(self):
        result, _ = self._setup()
        roles = assign_roles(result.dump, result.dataset)
        flat_got = [r for rr in roles for r in rr]
        flat_plan = [
            "background" if r == "edge" else r
            for rr in result.planted_roles for r in rr
        ]
        agree = np.mean([g == p for g, p in zip(flat_got, flat_plan)])
        assert agree >= 0.99

    def test_identical_distributions_have_near_zero_w1(self):
        # all three roles share one score distribution -> W1 ~ 0
        rng = np.random.default_rng(9)
        pooled = {r: rng.uniform(0, 1, 10_000) for r in ("a", "b", "c")}
        assert wasserstein1(pooled["a"], pooled["b"]) < 0.02
        assert wasserstein1(pooled["a"], pooled["c"]) < 0.02
        assert wasserstein1(pooled["b"], pooled["c"]) < 0.02

    def test_shared_bands_collapse_separation(self):
        # when every role draws scores from the same bands, the table rows
        # for the raw scores shrink toward zero
        shared = RoleBands(conf=(0.1, 0.6), nan=(1.0, 1.5))
        cfg = SynthConfig(
            n_images=20, queries_per_image=90, feat_dim=16, seed=31,
            known_bands=shared, unknown_bands=shared,
            background_bands=shared, edge_bands=shared,
        )
        result = generate(cfg)
        X, y = build_training_set(result.dump, result.dataset)
        model = train_random_forest(X, y, RandomForestConfig(n_trees=10), seed=4)
        table = separation_report(result.dump, result.dataset, model,
                                  with_curves=False)
        for score in ("confidence", "nan"):
            for value in table.distances[score].values():
                assert value < 0.08

    def test_separation_report_structure(self):
        result, model = self._setup()
        table = separation_report(result.dump, result.dataset, model)
        assert set(table.distances) == {"confidence", "nan", "objectness"}
        for row in table.distances.values():
            assert set(row) == {"background-known", "background-unknown", "unknown-known"}
            assert all(v >= 0.0 for v in row.values())
        assert sum(table.role_counts.values()) == 600
        # trained objectness should separate objects from background better
        # than raw confidence separates unknowns from background
        assert table.distances["objectness"]["background-unknown"] > \
            table.distances["confidence"]["background-unknown"]

    def test_table_formatting(self):
        result, model = self._setup()
        table = separation_report(result.dump, result.dataset, model,
                                  with_curves=False)
        text = table.format_table()
        assert "confidence" in text and "objectness" in text
