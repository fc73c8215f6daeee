"""Estimators when each user rates only some items."""
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ratingot import estimators
from ratingot.distributions import from_samples
from ratingot.incomplete import (ConsensusQuantile, all_incomplete_scores, consensus_barycenter,
                                 fit_sparse, incomplete_average_scores,
                                 incomplete_primitive_scores, incomplete_rating_scores,
                                 segmented_tie_counts, user_empirical_distributions)
from ratingot.ratings import CompleteRatings, SparseRatings


@st.composite
def sparse_data(draw, max_users=6, max_items=7, grid=10):
    """Random rating patterns where every user and item has a rating."""
    n = draw(st.integers(1, max_users))
    M = draw(st.integers(1, max_items))
    mask = np.array(draw(st.lists(st.booleans(), min_size=n * M, max_size=n * M))).reshape(n, M)
    for k in range(n):
        mask[k, draw(st.integers(0, M - 1))] = True
    for j in range(M):
        mask[draw(st.integers(0, n - 1)), j] = True
    values = draw(st.lists(st.integers(0, grid), min_size=n * M, max_size=n * M))
    m = np.array(values, dtype=float).reshape(n, M) / grid
    ui, ii = np.nonzero(mask)
    return SparseRatings(tuple(range(n)), tuple(range(M)), ui, ii, m[ui, ii])


class TestSegmentedTieCounts:
    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 4)), min_size=1, max_size=30))
    def test_definition(self, pairs):
        g = np.array([p[0] for p in pairs])
        v = np.array([p[1] for p in pairs], dtype=float)
        expected = [(g == gi).astype(int) @ (v <= vi) for gi, vi in zip(g, v)]
        np.testing.assert_array_equal(segmented_tie_counts(g, v), expected)


class TestConsensusQuantile:
    def test_rational_lookup(self):
        q = ConsensusQuantile([np.array([0.1, 0.5]), np.array([0.2, 0.4, 0.6])])
        # level 1/2: user 1 -> 0.1, user 2 -> ceil(3/2) = 2nd value 0.4
        assert q.at(1, 2) == pytest.approx(0.25)
        assert q.at(2, 3) == pytest.approx((0.5 + 0.4) / 2)
        assert q.at(1, 1) == pytest.approx(0.55)

    def test_levels_in_lowest_terms(self):
        q = ConsensusQuantile([np.zeros(2), np.zeros(4)])
        num, den = q.levels()
        assert list(zip(num, den)) == [(1, 4), (1, 2), (3, 4), (1, 1)]

    @given(st.lists(st.lists(st.integers(0, 10).map(lambda k: k / 10), min_size=1, max_size=6),
                    min_size=1, max_size=5))
    def test_fraction_oracle(self, lists):
        q = ConsensusQuantile([np.array(x) for x in lists])
        for den in range(1, 8):
            for num in range(1, den + 1):
                expected = oracles.barycenter_quantile(lists, Fraction(num, den))
                assert q.at(num, den) == pytest.approx(expected, abs=1e-12)

    def test_empty(self):
        with pytest.raises(ValueError):
            ConsensusQuantile([])


class TestUserDistributions:
    def test_two_ratings(self):
        d = SparseRatings.from_triples([("u", "a", 0.2), ("u", "b", 0.8), ("v", "a", 0.5)])
        dists = user_empirical_distributions(d)
        assert dists["u"].allclose(from_samples([0.2, 0.8]), atol=0)
        assert dists["v"].is_point_mass()

    @given(sparse_data())
    def test_dense_rows(self, data):
        if not data.is_dense():
            return
        m = data.to_complete().matrix
        for k, d in enumerate(user_empirical_distributions(data).values()):
            assert d.allclose(from_samples(m[k]), atol=0)


class TestDenseCoincidence:
    def test_random_instances(self, rng):
        for _ in range(40):
            n, M = int(rng.integers(1, 21)), int(rng.integers(1, 51))
            m = rng.integers(0, 10, (n, M)) / 9
            complete = CompleteRatings.from_array(m)
            dense = all_scores_dense = estimators.all_scores(complete)
            sparse = all_incomplete_scores(complete.to_sparse())
            for tag in ("average", "primitive", "rating"):
                np.testing.assert_allclose(sparse[tag].values, dense[tag].values,
                                           atol=1e-12, rtol=0)

    def test_barycenters_match(self, rng):
        m = rng.uniform(size=(5, 9))
        complete = CompleteRatings.from_array(m)
        a = consensus_barycenter(complete.to_sparse()).distribution
        b = estimators.consensus_barycenter(complete).distribution
        assert a.allclose(b, atol=1e-12)


class TestSparseOracle:
    @settings(max_examples=80, deadline=None)
    @given(sparse_data())
    def test_fraction_oracle(self, data):
        avg, prim, rating = oracles.reference_scores(data.triples())
        t = all_incomplete_scores(data)
        items = data.items
        np.testing.assert_allclose(t["average"].values, [avg[i] for i in items], atol=1e-12)
        np.testing.assert_allclose(t["primitive"].values, [prim[i] for i in items], atol=1e-12)
        np.testing.assert_allclose(t["rating"].values, [rating[i] for i in items], atol=1e-12)

    @given(sparse_data())
    def test_rating_monotone_in_primitive(self, data):
        fit = fit_sparse(data)
        order = np.argsort(fit.primitive, kind="stable")
        assert np.all(np.diff(fit.rating[order]) >= 0)


class TestExamples:
    def test_single_rater_at_own_maximum(self):
        triples = [("u", "a", 0.9), ("u", "b", 0.3), ("v", "b", 0.2), ("v", "c", 0.6)]
        data = SparseRatings.from_triples(triples)
        s = incomplete_primitive_scores(data)
        top = consensus_barycenter(data).quantile(1.0)
        assert s["a"] == pytest.approx(top)
        assert top == pytest.approx((0.9 + 0.6) / 2)

    def test_disjoint_constant_users(self):
        data = SparseRatings.from_triples([("u", "a", 0.5), ("u", "b", 0.5), ("v", "c", 0.5)])
        for t in all_incomplete_scores(data).values():
            np.testing.assert_array_equal(t.values, 0.5)

    @given(st.lists(st.integers(0, 20).map(lambda k: k / 20), min_size=1, max_size=10))
    def test_single_user_verbatim(self, row):
        data = SparseRatings.from_triples([("u", j, r) for j, r in enumerate(row)])
        np.testing.assert_array_equal(incomplete_rating_scores(data).values, row)
        np.testing.assert_array_equal(incomplete_primitive_scores(data).values, row)

    def test_average_over_raters_only(self):
        data = SparseRatings.from_triples([("u", "a", 0.2), ("v", "a", 0.4), ("v", "b", 1.0)])
        np.testing.assert_allclose(incomplete_average_scores(data).values, [0.3, 1.0])

    def test_pushforward_when_levels_are_item_fractions(self):
        # every user rates M/2 or M items, so barycenter breakpoints sit on j/M
        rng = np.random.default_rng(3)
        M = 8
        triples = []
        for k in range(12):
            items = range(M) if k % 3 == 0 else rng.choice(M, M // 2, replace=False)
            triples += [(k, int(j), float(rng.uniform())) for j in items]
        data = SparseRatings.from_triples(triples)
        fit = fit_sparse(data)
        assert np.unique(fit.primitive).size == M
        bary = fit.consensus.barycenter().distribution
        assert from_samples(fit.rating).allclose(bary, atol=1e-12)

    def test_pushforward_fails_off_item_fractions(self):
        # a user with 3 ratings puts a breakpoint at 1/3, which no item level c/4 reaches
        triples = [("u", j, r) for j, r in enumerate([0.1, 0.4, 0.6, 0.9])]
        triples += [("v", j, r) for j, r in enumerate([0.3, 0.2, 0.8])]
        fit = fit_sparse(SparseRatings.from_triples(triples))
        bary = fit.consensus.barycenter().distribution
        assert bary.size > np.unique(fit.rating).size
