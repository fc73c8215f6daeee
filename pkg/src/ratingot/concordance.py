"""Concordance statistics: Kendall's W and its extensions to ratings.

For per-user rating distributions mu_i with barycenter mu_hat and
primitive scores R0,

    w_scale   = Var(mu_hat)     / mean_i Var(mu_i)
    w_ratings = Var((R0)_* mu)  / mean_i Var(mu_i)

where mu puts equal mass on each item.  On rankings converted to ratings,
w_ratings is exactly Kendall's coefficient of concordance.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import estimators, incomplete
from .ratings import CompleteRatings, SparseRatings


class DegenerateDataError(ValueError):
    """Every user's ratings are constant, so the statistics are undefined."""


@dataclass(frozen=True)
class ConcordanceReport:
    w_scale: float
    w_ratings: float
    per_user_variance: dict
    barycenter_variance: float
    primitive_pushforward_variance: float

    @property
    def mean_user_variance(self) -> float:
        return float(np.mean(list(self.per_user_variance.values())))


def ranks_to_ratings(ranks: Sequence[int], M: int | None = None) -> np.ndarray:
    """Map rank k (1 = best) of M items to the rating ``1 - (k - 1) / M``."""
    r = np.asarray(ranks)
    if M is None:
        M = r.size
    if r.ndim != 1 or r.size != M or not np.array_equal(np.sort(r), np.arange(1, M + 1)):
        raise ValueError("ranks must be a permutation of 1..M")
    return 1.0 - (r - 1) / M


def _check_rank_matrix(rank_matrix) -> np.ndarray:
    m = np.atleast_2d(np.asarray(rank_matrix))
    M = m.shape[1]
    if M < 2:
        raise ValueError("Kendall's W needs at least two items")
    expected = np.arange(1, M + 1)
    for row in m:
        if not np.array_equal(np.sort(row), expected):
            raise ValueError("every row must be a permutation of 1..M (ties are not supported)")
    return m.astype(float)


def kendalls_w(rank_matrix) -> float:
    """Classical coefficient of concordance for an n x M matrix of ranks."""
    m = _check_rank_matrix(rank_matrix)
    M = m.shape[1]
    item_means = m.mean(axis=0)
    spread = np.mean((item_means - item_means.mean()) ** 2)
    return float(spread / ((M * M - 1) / 12.0))


def rank_matrix_to_ratings(rank_matrix) -> CompleteRatings:
    m = _check_rank_matrix(rank_matrix)
    M = m.shape[1]
    return CompleteRatings.from_array(1.0 - (m - 1) / M)


def _user_variance(rows) -> np.ndarray:
    # a constant row has variance exactly 0, not the rounding noise of its mean
    return np.array([0.0 if r.min() == r.max() else r.var() for r in rows])


def _report(users, per_user_var: np.ndarray, bary_var: float, prim_var: float) -> ConcordanceReport:
    denom = float(per_user_var.mean())
    if denom <= 0:
        raise DegenerateDataError("all users rate every item identically; "
                                  "concordance is undefined")
    return ConcordanceReport(
        w_scale=bary_var / denom,
        w_ratings=prim_var / denom,
        per_user_variance={u: float(v) for u, v in zip(users, per_user_var)},
        barycenter_variance=bary_var,
        primitive_pushforward_variance=prim_var,
    )


def concordance_report(data: CompleteRatings | SparseRatings) -> ConcordanceReport:
    """w_scale and w_ratings for complete or incomplete rating data.

    Incomplete data uses each user's empirical distribution over the items
    they rated and the incomplete-data primitive scores.
    """
    if isinstance(data, CompleteRatings):
        per_user_var = _user_variance(data.matrix)
        bary = estimators.consensus_barycenter(data).distribution
        prim = estimators.primitive_scores(data).values
        return _report(data.users, per_user_var, bary.variance(), float(prim.var()))
    per_user_var = _user_variance(data.user_ratings())
    fit = incomplete.fit_sparse(data)
    bary = fit.consensus.barycenter().distribution
    return _report(data.users, per_user_var, bary.variance(), float(fit.primitive.var()))


def concordance_limits(alpha, draws: int = 10**6, seed: int = 0) -> tuple[float, float]:
    """Large-n limits of (w_scale, w_ratings) for scale functions
    ``phi_k(x) = alpha_k (x - 1/2) + 1/2`` on a measure symmetric about 1/2.

    ``alpha`` is either an alpha law (anything with ``sample(size, rng)``),
    from which ``draws`` values are taken, or an array of draws.  The
    limits are

        w_scale   -> E|a|^2 / E[a^2]
        w_ratings -> E|a|^2 E[sgn a]^2 / E[a^2]

    which reduce to ``1 / E[a^2]`` and ``E[sgn a]^2 / E[a^2]`` when E|a| = 1.
    """
    if hasattr(alpha, "sample"):
        alpha = alpha.sample(draws, np.random.default_rng(seed))
    a = np.asarray(alpha, dtype=float)
    second = float(np.mean(a * a))
    if second == 0:
        raise DegenerateDataError("alpha is identically zero")
    abs_mean = float(np.mean(np.abs(a)))
    sign_mean = float(np.mean(np.sign(a)))
    return abs_mean ** 2 / second, abs_mean ** 2 * sign_mean ** 2 / second
