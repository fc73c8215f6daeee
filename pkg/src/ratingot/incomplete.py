"""Aggregate rating rules when each item is rated by a subset of users.

User k has rated ``m_k`` items, so their empirical CDF only takes values
``c / m_k``.  The barycenter of all users' empirical distributions has
quantile ``Q(p) = (1/n) sum_l F_l^{-1}(p)``, and user l's generalized
inverse at a rational level ``a / b`` is their ``ceil(a * m_l / b)``-th
smallest rating.  Levels are therefore carried as integer pairs and every
lookup is exact.
"""
from __future__ import annotations

from dataclasses import dataclass
import math
from math import gcd

import numpy as np

from .barycenter import Barycenter
from .distributions import EmpiricalDistribution, QuantileGrid
from .ratings import ScoreTable, SparseRatings


def segmented_tie_counts(group: np.ndarray, values: np.ndarray) -> np.ndarray:
    """``#{t' in same group : v[t'] <= v[t]}`` for every entry ``t``."""
    group = np.asarray(group)
    values = np.asarray(values, dtype=float)
    N = values.size
    order = np.lexsort((values, group))
    g, v = group[order], values[order]
    last = np.ones(N, dtype=bool)
    last[:-1] = (g[1:] != g[:-1]) | (v[1:] != v[:-1])
    pos = np.where(last, np.arange(N), N)
    block_end = np.minimum.accumulate(pos[::-1])[::-1]
    new_group = np.ones(N, dtype=bool)
    new_group[1:] = g[1:] != g[:-1]
    start = np.maximum.accumulate(np.where(new_group, np.arange(N), 0))
    counts = np.empty(N, dtype=np.int64)
    counts[order] = block_end - start + 1
    return counts


def exact_sum_terms(values) -> list[float]:
    """Nonoverlapping floats whose exact sum is the exact sum of ``values``.

    Each term is the correctly rounded remainder left by the previous ones,
    so the list is usually one or two floats long.
    """
    values = list(values)
    terms: list[float] = []
    while True:
        rest = math.fsum(values + [-t for t in terms])
        if rest == 0.0:
            return terms or [0.0]
        terms.append(rest)


class ConsensusQuantile:
    """Exact quantile function of the barycenter of per-user distributions.

    Users are grouped by how many ratings they gave; each group keeps the
    column sums of its row-sorted ratings as exact float expansions.  A
    quantile value is the correctly rounded total over all groups divided
    by n, which equals ``fsum`` over every user's order statistic.
    """

    def __init__(self, per_user: list[np.ndarray]):
        if not per_user:
            raise ValueError("no users")
        self.n = len(per_user)
        self.user_sizes = np.array([r.size for r in per_user], dtype=np.int64)
        groups: dict[int, list[np.ndarray]] = {}
        for r in per_user:
            groups.setdefault(int(r.size), []).append(np.sort(r))
        self._sizes = sorted(groups)
        self._terms = []
        for m in self._sizes:
            cols = [exact_sum_terms(c) for c in np.vstack(groups[m]).T]
            width = max(len(t) for t in cols)
            self._terms.append(np.array([t + [0.0] * (width - len(t)) for t in cols]))

    def at(self, num, den) -> np.ndarray:
        """Quantile at levels ``num / den`` (integer arrays, 0 < num <= den)."""
        num, den = np.broadcast_arrays(np.asarray(num, dtype=np.int64),
                                       np.asarray(den, dtype=np.int64))
        shape = num.shape
        g = np.gcd(num, den)
        pairs = np.stack([(num // g).ravel(), (den // g).ravel()], axis=1)
        if pairs.size == 0:
            return np.zeros(shape)
        uniq, inverse = np.unique(pairs, axis=0, return_inverse=True)
        un, ud = uniq[:, 0], uniq[:, 1]
        parts = np.hstack([terms[(un * m + ud - 1) // ud - 1]
                           for m, terms in zip(self._sizes, self._terms)])
        if parts.shape[1] == 1:
            totals = parts[:, 0]
        else:
            totals = np.array([math.fsum(row) for row in parts])
        return (totals / self.n)[inverse.ravel()].reshape(shape)

    def levels(self) -> tuple[np.ndarray, np.ndarray]:
        """All breakpoint levels ``j / m_k`` in lowest terms, ascending."""
        pairs = set()
        for m in self._sizes:
            for j in range(1, m + 1):
                g = gcd(j, m)
                pairs.add((j // g, m // g))
        arr = np.array(sorted(pairs, key=lambda q: q[0] / q[1]), dtype=np.int64)
        return arr[:, 0], arr[:, 1]

    def barycenter(self) -> Barycenter:
        num, den = self.levels()
        levels = num / den
        levels[-1] = 1.0
        grid = QuantileGrid(levels, self.at(num, den))
        return Barycenter(grid.to_distribution(), self.n, grid)


def user_empirical_distributions(data: SparseRatings) -> dict:
    """user -> equal-weight distribution over that user's own ratings."""
    return {u: EmpiricalDistribution.from_atoms(r)
            for u, r in zip(data.users, data.user_ratings())}


@dataclass(frozen=True)
class SparseFit:
    consensus: ConsensusQuantile
    primitive: np.ndarray
    rating: np.ndarray


def _item_means(item_index: np.ndarray, values: np.ndarray, n_items: int) -> np.ndarray:
    """Per-item means from correctly rounded sums (see ``exact_mean``)."""
    order = np.argsort(item_index, kind="stable")
    groups = np.split(values[order], np.cumsum(np.bincount(item_index, minlength=n_items))[:-1])
    return np.array([math.fsum(g) / g.size for g in groups])


def fit_sparse(data: SparseRatings) -> SparseFit:
    consensus = ConsensusQuantile(data.user_ratings())
    counts = segmented_tie_counts(data.user_index, data.values)
    transported = consensus.at(counts, consensus.user_sizes[data.user_index])
    primitive = _item_means(data.item_index, transported, data.n_items)
    M = data.n_items
    prim_counts = segmented_tie_counts(np.zeros(M, dtype=np.int64), primitive)
    rating = consensus.at(prim_counts, np.full(M, M, dtype=np.int64))
    return SparseFit(consensus, primitive, rating)


def consensus_barycenter(data: SparseRatings) -> Barycenter:
    """Barycenter of every user's empirical distribution (all n users)."""
    return ConsensusQuantile(data.user_ratings()).barycenter()


def incomplete_primitive_scores(data: SparseRatings) -> ScoreTable:
    return ScoreTable(data.items, fit_sparse(data).primitive, "primitive")


def incomplete_rating_scores(data: SparseRatings) -> ScoreTable:
    return ScoreTable(data.items, fit_sparse(data).rating, "rating")


def incomplete_average_scores(data: SparseRatings) -> ScoreTable:
    """Mean raw rating over the users who rated each item."""
    return ScoreTable(data.items, _item_means(data.item_index, data.values, data.n_items), "average")


def all_incomplete_scores(data: SparseRatings) -> dict[str, ScoreTable]:
    fit = fit_sparse(data)
    return {
        "average": incomplete_average_scores(data),
        "primitive": ScoreTable(data.items, fit.primitive, "primitive"),
        "rating": ScoreTable(data.items, fit.rating, "rating"),
    }
