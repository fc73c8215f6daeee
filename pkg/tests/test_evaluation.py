import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ratingot.evaluation import (DisconnectedComparisonWarning, PairwiseCounts, Ranking,
                                 btl_scores, pairwise_agreement, pairwise_counts,
                                 random_ranking_d1, rank_distance_d1, ranking_from_scores,
                                 utility_report)
from ratingot.ratings import ScoreTable, SparseRatings

perms = st.integers(2, 9).flatmap(lambda M: st.tuples(*[st.permutations(range(1, M + 1))] * 3))


def _ranking(ranks):
    return Ranking(tuple(range(len(ranks))), np.array(ranks))


class TestRanking:
    @pytest.mark.parametrize("scores, expected", [
        ({"a": 0.9, "b": 0.1}, {"a": 1, "b": 2}),
        ({"a": 0.3, "b": 0.7, "c": 0.5}, {"b": 1, "c": 2, "a": 3}),
        ({"c": 0.5, "a": 0.5, "b": 0.5}, {"a": 1, "b": 2, "c": 3}),
    ])
    def test_from_scores(self, scores, expected):
        r = ranking_from_scores(scores)
        assert {i: r[i] for i in scores} == expected

    def test_score_table_input_and_top(self):
        r = ranking_from_scores(ScoreTable(("x", "y", "z"), [0.2, 0.9, 0.4], "rating"))
        assert r.top(2) == ["y", "z"]

    def test_not_bijection(self):
        with pytest.raises(ValueError):
            Ranking(("a", "b"), np.array([1, 1]))


class TestD1:
    def test_identical(self):
        assert rank_distance_d1(_ranking([2, 1, 3]), _ranking([2, 1, 3])) == 0.0

    def test_reversal(self):
        assert rank_distance_d1(_ranking([1, 2, 3]), _ranking([3, 2, 1])) == pytest.approx(4 / 6)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            rank_distance_d1(Ranking(("a", "b"), [1, 2]), Ranking(("a", "c"), [1, 2]))

    @given(perms)
    def test_pseudometric(self, triple):
        r, s, t = (_ranking(p) for p in triple)
        assert rank_distance_d1(r, s) == rank_distance_d1(s, r)
        assert rank_distance_d1(r, t) <= rank_distance_d1(r, s) + rank_distance_d1(s, t) + 1e-12
        assert 0 <= rank_distance_d1(r, s) <= 1

    @pytest.mark.parametrize("M", [2, 3, 4, 5])
    def test_random_baseline_exact_mean(self, M):
        # exhaustive mean over all permutations is (M + 1) / (3 M)
        base = _ranking(list(range(1, M + 1)))
        mean = np.mean([rank_distance_d1(base, _ranking(p))
                        for p in itertools.permutations(range(1, M + 1))])
        assert mean == pytest.approx((M + 1) / (3 * M))

    def test_random_baseline_monte_carlo(self):
        base = ranking_from_scores({i: np.sin(i) for i in range(50)})
        assert random_ranking_d1(base, draws=10_000, seed=1) == pytest.approx(51 / 150, abs=5e-3)


def _data(triples):
    return SparseRatings.from_triples(triples)


class TestPairwiseCounts:
    def test_both_prefer_a(self):
        c = pairwise_counts(_data([("u", "a", 0.9), ("u", "b", 0.1), ("v", "a", 0.6), ("v", "b", 0.5)]))
        assert c["a", "b"] == 2 and c["b", "a"] == 0

    def test_tie(self):
        c = pairwise_counts(_data([("u", "a", 0.5), ("u", "b", 0.5)]))
        assert c["a", "b"] == 0 and c["b", "a"] == 0

    def test_no_co_raters(self):
        c = pairwise_counts(_data([("u", "a", 0.5), ("v", "b", 0.1)]))
        assert c.comparisons().sum() == 0

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 5), st.integers(0, 4)),
                    min_size=1, max_size=30, unique_by=lambda t: t[:2]))
    def test_brute_force(self, rows):
        data = _data([(u, i, r / 4) for u, i, r in rows])
        c = pairwise_counts(data)
        wins = oracles.brute_wins(data.triples(), data.items)
        for a, b in itertools.product(data.items, repeat=2):
            assert c[a, b] == wins[a][b]
        co = {}
        for u, i, _ in rows:
            co.setdefault(u, set()).add(i)
        for a, b in itertools.combinations(data.items, 2):
            both = sum(1 for s in co.values() if a in s and b in s)
            assert c[a, b] + c[b, a] <= both


class TestAgreement:
    COUNTS = PairwiseCounts(("a", "b"), np.array([[0, 3], [1, 0]]))

    def test_agree(self):
        assert pairwise_agreement({"a": 0.9, "b": 0.2}, self.COUNTS) == 1.0

    def test_reversed(self):
        assert pairwise_agreement({"a": 0.1, "b": 0.2}, self.COUNTS) == 0.0

    def test_no_eligible_pairs(self):
        with pytest.raises(ValueError):
            pairwise_agreement({"a": 0.5, "b": 0.5}, self.COUNTS)

    def test_exclusions_counted(self):
        counts = PairwiseCounts(("a", "b", "c"), np.array([[0, 2, 1], [0, 0, 1], [1, 1, 0]]))
        # (a, b) decided for a; (a, c) and (b, c) tied majorities
        frac, agree, eligible = pairwise_agreement({"a": 1, "b": 0, "c": 0.5}, counts,
                                                   return_counts=True)
        assert (frac, agree, eligible) == (1.0, 1, 1)

    def test_single_user_self_consistent(self):
        triples = [("u", i, r) for i, r in enumerate([0.3, 0.9, 0.1, 0.5])]
        data = _data(triples)
        assert pairwise_agreement({i: r for _, i, r in triples}, pairwise_counts(data)) == 1.0


class TestBTL:
    def test_balanced_pair(self):
        s = btl_scores(PairwiseCounts(("a", "b"), np.array([[0, 2], [2, 0]])))
        np.testing.assert_allclose(s.values, [0.5, 0.5])

    def test_two_state_closed_form(self):
        s = btl_scores(PairwiseCounts(("a", "b"), np.array([[0, 3], [1, 0]])))
        np.testing.assert_allclose(s.values, [0.75, 0.25], atol=1e-12)
        assert s.meta["connected"]

    def test_unbeaten_item_first(self, rng):
        M = 6
        W = rng.integers(0, 5, (M, M))
        np.fill_diagonal(W, 0)
        W[:, 2] += W[2, :]  # move every loss of item 2 onto its wins
        W[2, :] = 0
        W = W.T.copy()
        counts = PairwiseCounts(tuple("abcdef"), W)
        assert ranking_from_scores(btl_scores(counts)).top(1) == ["c"]

    @given(st.integers(0, 2**31), st.integers(2, 7), st.integers(2, 5))
    def test_eigenvector_oracle_and_scaling(self, seed, M, k):
        rng = np.random.default_rng(seed)
        W = rng.integers(1, 6, (M, M))
        np.fill_diagonal(W, 0)
        counts = PairwiseCounts(tuple(range(M)), W)
        s = btl_scores(counts).values
        np.testing.assert_allclose(s, oracles.rank_centrality_eig(W), atol=1e-9)
        np.testing.assert_allclose(btl_scores(PairwiseCounts(counts.items, k * W)).values, s, atol=1e-9)

    def test_disconnected(self):
        W = np.zeros((4, 4), dtype=int)
        W[0, 1], W[1, 0] = 3, 1
        W[2, 3], W[3, 2] = 1, 1
        with pytest.warns(DisconnectedComparisonWarning):
            s = btl_scores(PairwiseCounts(tuple("abcd"), W))
        assert not s.meta["connected"] and s.meta["components"] == 2
        np.testing.assert_allclose(s.values, [0.375, 0.125, 0.25, 0.25])

    def test_no_comparisons(self):
        with pytest.raises(ValueError):
            btl_scores(PairwiseCounts(("a", "b"), np.zeros((2, 2), dtype=int)))


class TestUtility:
    TRIPLES = [("u", "a", 0.8), ("u", "b", 0.9), ("u", "c", 0.1),
               ("v", "a", 0.2), ("v", "c", 0.6), ("w", "c", 0.5)]

    def test_example_contributions(self):
        data = _data(self.TRIPLES)
        ranking = ranking_from_scores({"a": 3, "b": 2, "c": 1})
        rep = utility_report(data, ranking, 2)
        # u: top-2 ratings 0.8 and 0.9, both above their mean 0.6
        assert rep.per_user["u"][0] == pytest.approx(0.85)
        assert rep.per_user["u"][2] == 1.0
        # v rated only a in the top 2: 0.2 is below their mean and alone in the pool
        assert rep.per_user["v"] == pytest.approx((0.2, 1.0, 0.0))
        assert rep.users == 2 and "w" not in rep.per_user
        assert rep.u1 == pytest.approx((0.85 + 0.2) / 2)

    def test_union_double_counting(self):
        data = _data(self.TRIPLES)
        a = ranking_from_scores({"a": 3, "b": 2, "c": 1})
        b = ranking_from_scores({"c": 3, "a": 2, "b": 1})
        rep = utility_report(data, a, 2, other=b)
        # user u pool: a twice (both lists), b once, c once -> {0.8, 0.8, 0.9, 0.1}
        assert rep.per_user["u"][1] == pytest.approx((3 / 4 + 4 / 4) / 2)
        # user v pool: a twice, c once -> {0.2, 0.2, 0.6}; single eligible 0.2 -> 2/3
        assert rep.per_user["v"][1] == pytest.approx(2 / 3)

    def test_top_of_union_scores_one(self):
        data = _data([("u", "a", 0.9), ("u", "b", 0.3)])
        a = ranking_from_scores({"a": 2, "b": 1})
        b = ranking_from_scores({"a": 1, "b": 2})
        assert utility_report(data, a, 1, other=b).per_user["u"][1] == 1.0

    def test_self_comparison(self):
        data = _data(self.TRIPLES)
        r = ranking_from_scores({"a": 3, "b": 2, "c": 1})
        assert utility_report(data, r, 2) == utility_report(data, r, 2, other=r)

    def test_k_too_large(self):
        data = _data(self.TRIPLES)
        with pytest.raises(ValueError):
            utility_report(data, ranking_from_scores({"a": 3, "b": 2, "c": 1}), 4)
