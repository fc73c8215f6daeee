"""Comparing aggregation rules: rankings, rank distance, pairwise winners,
Rank Centrality and per-user utilities."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .ratings import ScoreTable, SparseRatings, as_score_array


class DisconnectedComparisonWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class Ranking:
    """Rank per item, 1 = best."""

    items: tuple
    ranks: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.ranks, dtype=np.int64)
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "ranks", r)
        if not np.array_equal(np.sort(r), np.arange(1, r.size + 1)) or r.size != len(self.items):
            raise ValueError("ranks must be a bijection onto 1..M")

    def __getitem__(self, item) -> int:
        return int(self.ranks[self.items.index(item)])

    def __len__(self) -> int:
        return len(self.items)

    def top(self, k: int) -> list:
        """Items holding ranks 1..k, best first."""
        order = np.argsort(self.ranks)
        return [self.items[j] for j in order[:k]]

    def aligned(self, items: Sequence) -> np.ndarray:
        pos = {i: k for k, i in enumerate(self.items)}
        return self.ranks[[pos[i] for i in items]]


def _item_key(item):
    # keeps mixed-type ids comparable for tie breaking
    return (type(item).__name__, item)


def ranking_from_scores(scores: ScoreTable | Mapping) -> Ranking:
    """Rank 1 to the highest score; ties go to the smaller item identifier."""
    if isinstance(scores, ScoreTable):
        items, values = list(scores.items), scores.values
    else:
        items = list(scores)
        values = np.array([float(scores[i]) for i in items])
    id_order = sorted(range(len(items)), key=lambda k: _item_key(items[k]))
    id_rank = np.empty(len(items), dtype=np.int64)
    id_rank[id_order] = np.arange(len(items))
    order = np.lexsort((id_rank, -values))
    ranks = np.empty(len(items), dtype=np.int64)
    ranks[order] = np.arange(1, len(items) + 1)
    return Ranking(tuple(items), ranks)


def rank_distance_d1(r: Ranking, s: Ranking) -> float:
    """Normalized average change in ranking, ``sum |r_k - s_k| / (M (M - 1))``."""
    if set(r.items) != set(s.items):
        raise ValueError("rankings cover different items")
    M = len(r)
    if M < 2:
        raise ValueError("d1 needs at least two items")
    diff = np.abs(r.ranks - s.aligned(r.items)).sum()
    return float(diff / (M * (M - 1)))


def random_ranking_d1(ranking: Ranking, draws: int = 10_000, seed: int = 0) -> float:
    """Monte Carlo mean of d1 between ``ranking`` and uniform random rankings."""
    rng = np.random.default_rng(seed)
    M = len(ranking)
    perms = rng.permuted(np.tile(np.arange(1, M + 1), (draws, 1)), axis=1)
    return float(np.abs(perms - ranking.ranks).sum(axis=1).mean() / (M * (M - 1)))


@dataclass(frozen=True, eq=False)
class PairwiseCounts:
    """``wins[i, j]`` = number of users rating item i strictly above item j."""

    items: tuple
    wins: np.ndarray

    def __getitem__(self, pair) -> int:
        i, j = pair
        return int(self.wins[self.items.index(i), self.items.index(j)])

    def comparisons(self) -> np.ndarray:
        return self.wins + self.wins.T


def pairwise_counts(data: SparseRatings) -> PairwiseCounts:
    """Tally strict pairwise preferences among items each user co-rated."""
    M = data.n_items
    wins = np.zeros((M, M), dtype=np.int64)
    order = np.argsort(data.user_index, kind="stable")
    bounds = np.cumsum(data.user_counts())[:-1]
    for idx in np.split(order, bounds):
        items = data.item_index[idx]
        r = data.values[idx]
        wins[np.ix_(items, items)] += r[:, None] > r[None, :]
    return PairwiseCounts(data.items, wins)


def pairwise_agreement(scores: ScoreTable | Mapping, counts: PairwiseCounts,
                       return_counts: bool = False):
    """Fraction of majority-decided pairs whose score order matches the winner.

    Pairs with a tied majority or tied scores are left out of the
    denominator.  With ``return_counts`` the pair ``(agreeing, eligible)`` is
    returned as well.
    """
    s = as_score_array(scores, counts.items)
    iu, ju = np.triu_indices(len(counts.items), k=1)
    fwd, back = counts.wins[iu, ju], counts.wins[ju, iu]
    ds = s[iu] - s[ju]
    eligible = (fwd != back) & (ds != 0)
    agree = eligible & ((fwd > back) == (ds > 0))
    n_eligible = int(eligible.sum())
    if n_eligible == 0:
        raise ValueError("no pair has both a strict majority and distinct scores")
    frac = agree.sum() / n_eligible
    if return_counts:
        return float(frac), int(agree.sum()), n_eligible
    return float(frac)


def _stationary(P: np.ndarray) -> np.ndarray:
    n = P.shape[0]
    if n == 1:
        return np.ones(1)
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
        if np.all(pi > -1e-12) and np.allclose(pi @ P, pi, atol=1e-12):
            pi = np.clip(pi, 0, None)
            return pi / pi.sum()
    except np.linalg.LinAlgError:
        pass
    # several closed classes: iterate the lazy chain from the uniform start
    lazy = 0.5 * (np.eye(n) + P)
    pi = np.full(n, 1.0 / n)
    for _ in range(100_000):
        nxt = pi @ lazy
        if np.abs(nxt - pi).max() < 1e-15:
            break
        pi = nxt
    return nxt / nxt.sum()


def btl_scores(counts: PairwiseCounts) -> ScoreTable:
    """Rank Centrality: stationary law of the pairwise-loss random walk.

    From item i the walk moves to j with probability
    ``wins[j, i] / (wins[i, j] + wins[j, i]) / d_max`` where ``d_max`` is the
    largest number of distinct comparison partners of any item; the rest
    of the mass stays at i.  A disconnected comparison graph is scored one
    component at a time, each component weighted by its share of items,
    and flagged in ``meta``.
    """
    W = counts.wins.astype(float)
    T = W + W.T
    if not np.any(T > 0):
        raise ValueError("no pairwise comparisons")
    compared = T > 0
    d_max = compared.sum(axis=1).max()
    P = np.zeros_like(W)
    P[compared] = W.T[compared] / T[compared] / d_max
    np.fill_diagonal(P, 1.0 - P.sum(axis=1))

    M = W.shape[0]
    n_comp, labels = connected_components(compared, directed=False)
    scores = np.zeros(M)
    for c in range(n_comp):
        idx = np.flatnonzero(labels == c)
        sub = P[np.ix_(idx, idx)]
        scores[idx] = _stationary(sub) * (idx.size / M)
    meta = {"connected": n_comp == 1, "components": int(n_comp)}
    if n_comp > 1:
        warnings.warn(f"comparison graph has {n_comp} components; scored per component",
                      DisconnectedComparisonWarning, stacklevel=2)
    return ScoreTable(counts.items, scores, "btl", meta)


@dataclass(frozen=True)
class UtilityReport:
    u1: float
    u2: float
    u3: float
    users: int
    per_user: dict = field(default_factory=dict, repr=False)


def utility_report(data: SparseRatings, ranking: Ranking, K: int,
                   other: Ranking | None = None) -> UtilityReport:
    """Per-user utilities of the items in a ranking's top K, averaged over users.

    Only users who rated at least one top-K item contribute.  ``u1`` is the
    mean such rating; ``u3`` the share of them at or above the user's mean
    over all their ratings.  ``u2`` is the mean quantile of each such rating
    among the user's ratings of items in the top K of ``ranking`` and of
    ``other`` together, an item in both lists being counted twice.  Without
    ``other`` the ranking is compared with itself.
    """
    M = data.n_items
    if K > M:
        raise ValueError(f"top-K of {K} exceeds the {M} ranked items")
    if K < 1:
        raise ValueError("K must be positive")
    if set(ranking.items) != set(data.items):
        raise ValueError("ranking and data cover different items")
    other = ranking if other is None else other
    pos = {i: k for k, i in enumerate(data.items)}
    top_a = np.zeros(M, dtype=np.int64)
    top_a[[pos[i] for i in ranking.top(K)]] = 1
    top_b = np.zeros(M, dtype=np.int64)
    top_b[[pos[i] for i in other.top(K)]] = 1
    multiplicity = top_a + top_b

    order = np.argsort(data.user_index, kind="stable")
    bounds = np.cumsum(data.user_counts())[:-1]
    per_user = {}
    for u, idx in zip(data.users, np.split(order, bounds)):
        items, r = data.item_index[idx], data.values[idx]
        mine = top_a[items] == 1
        if not mine.any():
            continue
        eligible = r[mine]
        pool_w = multiplicity[items]
        pool = pool_w > 0
        below = (r[pool][None, :] <= eligible[:, None]) * pool_w[pool][None, :]
        u2 = below.sum(axis=1) / pool_w[pool].sum()
        per_user[u] = (eligible.mean(), u2.mean(), np.mean(eligible >= r.mean()))
    if not per_user:
        raise ValueError("no user rated any top-K item")
    arr = np.array(list(per_user.values()))
    u1, u2, u3 = arr.mean(axis=0)
    return UtilityReport(float(u1), float(u2), float(u3), len(per_user), per_user)
