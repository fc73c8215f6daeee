import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ratingot.barycenter import frechet_functional, frechet_mean
from ratingot.distributions import EmpiricalDistribution, from_samples, w2_distance

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
sample_lists = st.lists(st.lists(unit, min_size=1, max_size=10), min_size=1, max_size=10)


class TestFrechetMean:
    def test_point_masses(self):
        b = frechet_mean([from_samples([0.2]), from_samples([0.6])])
        assert b.distribution.is_point_mass()
        assert b.distribution.locations[0] == pytest.approx(0.4)

    def test_two_atom_average(self):
        b = frechet_mean([from_samples([0.0, 1.0]), from_samples([0.2, 0.6])])
        np.testing.assert_allclose(b.distribution.locations, [0.1, 0.8])
        np.testing.assert_allclose(b.distribution.weights, [0.5, 0.5])

    def test_single_input(self):
        d = from_samples([0.1, 0.3, 0.3, 0.9])
        assert frechet_mean([d]).distribution.allclose(d, atol=0)

    def test_empty(self):
        with pytest.raises(ValueError):
            frechet_mean([])

    def test_unequal_sizes(self):
        # levels {1/2, 1} and {1/3, 2/3, 1} merge to {1/3, 1/2, 2/3, 1}
        b = frechet_mean([from_samples([0.0, 0.6]), from_samples([0.3, 0.6, 0.9])])
        np.testing.assert_allclose(b.grid.levels, [1 / 3, 1 / 2, 2 / 3, 1])
        np.testing.assert_allclose(b.grid.values, [0.15, 0.3, 0.6, 0.75])

    @given(sample_lists)
    def test_fraction_oracle(self, lists):
        b = frechet_mean([from_samples(xs) for xs in lists])
        for level, value in oracles.barycenter_atoms(lists):
            assert b.quantile(float(level)) == pytest.approx(value, abs=1e-12)

    @given(st.lists(unit, min_size=1, max_size=10), st.integers(1, 6))
    def test_idempotent(self, xs, n):
        d = from_samples(xs)
        assert frechet_mean([d] * n).distribution.allclose(d, atol=1e-12)

    @given(sample_lists, st.floats(min_value=-0.3, max_value=0.3))
    def test_translation_equivariant(self, lists, c):
        lists = [np.clip(xs, 0.3, 0.7) for xs in map(np.asarray, lists)]
        base = frechet_mean([from_samples(xs) for xs in lists]).distribution
        moved = frechet_mean([from_samples(xs + c) for xs in lists]).distribution
        np.testing.assert_allclose(moved.locations, base.locations + c, atol=1e-12)
        np.testing.assert_allclose(moved.weights, base.weights, atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(sample_lists, st.integers(0, 2**31))
    def test_optimal_against_jittered_candidates(self, lists, seed):
        dists = [from_samples(xs) for xs in lists]
        best = frechet_mean(dists).distribution
        value = frechet_functional(best, dists)
        rng = np.random.default_rng(seed)
        for _ in range(100):
            x = np.clip(best.locations + rng.uniform(-0.05, 0.05, best.size), 0, 1)
            other = EmpiricalDistribution.from_atoms(x, best.weights)
            assert value <= frechet_functional(other, dists) + 1e-12


class TestFrechetFunctional:
    def test_two_point_masses(self):
        got = frechet_functional(from_samples([0.5]), [from_samples([0.0]), from_samples([1.0])])
        assert got == pytest.approx(0.25)

    def test_self(self):
        d = from_samples([0.1, 0.4])
        assert frechet_functional(d, [d]) == 0.0

    def test_matches_distances(self):
        ds = [from_samples([0.1, 0.5]), from_samples([0.3])]
        c = from_samples([0.2, 0.9])
        expected = np.mean([w2_distance(d, c) ** 2 for d in ds])
        assert frechet_functional(c, ds) == pytest.approx(expected)
