"""Aggregate rating rules for a complete user-by-item rating matrix.

Three estimators are provided:

``average_scores``
    The plain per-item mean of the raw ratings.
``primitive_scores``
    Each user's rating is moved onto the consensus scale (the W2
    barycenter of all users' rating distributions) by the monotone map
    between that user's distribution and the barycenter; the moved ratings
    are then averaged per item.
``rating_scores``
    The primitive scores, rescaled by the monotone map from their own
    empirical distribution back onto the barycenter.

With equal weights per item, every personal CDF value is an integer count
over the number of items, and the barycenter quantile at level ``c / M``
is the mean of the users' ``c``-th smallest ratings.  The implementation
works with these integer counts directly, which keeps all lookups exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .barycenter import Barycenter
from .distributions import EmpiricalDistribution, QuantileGrid, w2_distance
from .ratings import CompleteRatings, ScoreTable, as_score_array


def tie_counts(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise ``#{j : r[k, j] <= r[k, i]}`` together with the sorted rows.

    Tied ratings all receive the count at the top of their tie block, which
    is the right-continuous CDF convention.
    """
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    n, M = m.shape
    order = np.argsort(m, axis=1, kind="stable")
    s = np.take_along_axis(m, order, axis=1)
    last = np.ones_like(s, dtype=bool)
    last[:, :-1] = s[:, 1:] != s[:, :-1]
    pos = np.where(last, np.arange(M), M)
    block_end = np.minimum.accumulate(pos[:, ::-1], axis=1)[:, ::-1]
    counts = np.empty_like(order)
    np.put_along_axis(counts, order, block_end + 1, axis=1)
    return counts, s


def exact_mean(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Mean along ``axis`` from a correctly rounded sum.

    The sum is the exact sum of the floats rounded once, so it does not
    depend on summation order, and two items whose scores tie exactly keep
    bit-identical means.  Ties decide CDF levels downstream, so a one-ulp
    split would move a score by a whole quantile block.
    """
    v = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    sums = np.array([math.fsum(row) for row in v.reshape(-1, v.shape[-1])])
    return sums.reshape(v.shape[:-1]) / v.shape[-1]


@dataclass(frozen=True)
class _Fit:
    barycenter_levels: np.ndarray   # quantile of the barycenter at c / M, c = 1..M
    counts: np.ndarray              # per-user CDF counts of each rating
    primitive: np.ndarray
    rating: np.ndarray


def _fit(data: CompleteRatings) -> _Fit:
    counts, s = tie_counts(data.matrix)
    bary = exact_mean(s, axis=0)
    transported = bary[counts - 1]
    primitive = exact_mean(transported, axis=0)
    prim_counts, _ = tie_counts(primitive[None, :])
    rating = bary[prim_counts[0] - 1]
    return _Fit(bary, counts, primitive, rating)


def consensus_barycenter(data: CompleteRatings) -> Barycenter:
    """W2 barycenter of the users' rating distributions."""
    _, s = tie_counts(data.matrix)
    M = data.n_items
    levels = np.arange(1, M + 1) / M
    grid = QuantileGrid(levels, exact_mean(s, axis=0))
    return Barycenter(grid.to_distribution(), data.n_users, grid)


def user_distributions(data: CompleteRatings) -> list[EmpiricalDistribution]:
    return [EmpiricalDistribution.from_atoms(row) for row in data.matrix]


def average_scores(data: CompleteRatings) -> ScoreTable:
    return ScoreTable(data.items, exact_mean(data.matrix, axis=0), "average")


def primitive_scores(data: CompleteRatings) -> ScoreTable:
    return ScoreTable(data.items, _fit(data).primitive, "primitive")


def rating_scores(data: CompleteRatings) -> ScoreTable:
    return ScoreTable(data.items, _fit(data).rating, "rating")


def all_scores(data: CompleteRatings) -> dict[str, ScoreTable]:
    """The three score tables, sharing one barycenter computation."""
    fit = _fit(data)
    return {
        "average": average_scores(data),
        "primitive": ScoreTable(data.items, fit.primitive, "primitive"),
        "rating": ScoreTable(data.items, fit.rating, "rating"),
    }


@dataclass(frozen=True)
class LossDecomposition:
    """Split of an L2(mu) estimation loss into scale and order parts.

    ``total**2 == scale_term**2 + order_term**2``.  ``rearrangement`` is the
    L2(mu) distance between the ranking-induced rearrangement and the
    identity, reported alongside as a diagnostic.
    """

    total: float
    scale_term: float
    order_term: float
    rearrangement: float


def _item_weights(truth: np.ndarray, mu: EmpiricalDistribution | None) -> np.ndarray:
    if mu is None:
        return np.full(truth.size, 1.0 / truth.size)
    w = np.empty(truth.size)
    locs, inverse, mult = np.unique(truth, return_inverse=True, return_counts=True)
    for k, x in enumerate(locs):
        j = np.searchsorted(mu.locations, x)
        if j >= mu.size or abs(mu.locations[j] - x) > 1e-12:
            raise ValueError(f"truth value {x!r} is not an atom of mu")
        w[inverse == k] = mu.weights[j] / mult[k]
    return w


def l2_loss(estimated, truth: Mapping, mu: EmpiricalDistribution | None = None) -> float:
    """``||E - id||`` in L2(mu); mu defaults to equal weight per item."""
    items = list(truth)
    t = np.array([float(truth[i]) for i in items])
    e = as_score_array(estimated, items)
    w = _item_weights(t, mu)
    return float(np.sqrt(np.dot(w, (e - t) ** 2)))


def loss_decomposition(estimated, truth: Mapping,
                       mu: EmpiricalDistribution | None = None) -> LossDecomposition:
    """Scale/order split of ``||E - id||_{L2(mu)}``.

    The scale part is ``W2(E_* mu, mu)``; the order part is whatever remains
    of the squared loss.  The rearrangement sigma sends the j-th atom to the
    atom whose rank equals the rank of ``E`` at atom j (ties broken by atom
    order); it is exact for equal-weight atoms.
    """
    items = list(truth)
    if isinstance(estimated, ScoreTable):
        if set(estimated.items) != set(items):
            raise ValueError("estimated and truth cover different items")
    elif set(estimated) != set(items):
        raise ValueError("estimated and truth cover different items")
    t = np.array([float(truth[i]) for i in items])
    e = as_score_array(estimated, items)
    w = _item_weights(t, mu)
    base = EmpiricalDistribution.from_atoms(t, w)

    total = float(np.sqrt(np.dot(w, (e - t) ** 2)))
    by_truth = np.lexsort((np.arange(t.size), t))
    if np.all(np.diff(e[by_truth]) >= 0):
        # E is already nondecreasing: the identity coupling is the monotone one
        scale, order = total, 0.0
    else:
        scale = w2_distance(EmpiricalDistribution.from_atoms(e, w, check_range=False), base)
        order = float(np.sqrt(max(total * total - scale * scale, 0.0)))

    by_estimate = np.lexsort((t, e))
    sigma = np.empty_like(t)
    sigma[by_estimate] = t[by_truth]
    rearr = float(np.sqrt(np.dot(w, (sigma - t) ** 2)))
    return LossDecomposition(total, scale, order, rearr)
