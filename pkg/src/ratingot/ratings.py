"""Containers for rating data and per-item scores."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

import numpy as np

ESTIMATOR_TAGS = ("average", "primitive", "rating", "btl")


@dataclass(frozen=True, eq=False)
class CompleteRatings:
    """Dense user-by-item grid of ratings in [0, 1]."""

    users: tuple
    items: tuple
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape != (len(self.users), len(self.items)):
            raise ValueError(f"matrix shape {m.shape} does not match "
                             f"{len(self.users)} users x {len(self.items)} items")
        if m.size == 0:
            raise ValueError("need at least one user and one item")
        if not np.all(np.isfinite(m)) or m.min() < 0 or m.max() > 1:
            raise ValueError("ratings must lie in [0, 1]")
        if len(set(self.users)) != len(self.users) or len(set(self.items)) != len(self.items):
            raise ValueError("user and item identifiers must be unique")

    @classmethod
    def from_array(cls, matrix) -> "CompleteRatings":
        m = np.asarray(matrix, dtype=float)
        return cls(tuple(range(m.shape[0])), tuple(range(m.shape[1])), m)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_items(self) -> int:
        return len(self.items)

    def to_sparse(self) -> "SparseRatings":
        n, M = self.matrix.shape
        return SparseRatings(self.users, self.items,
                             np.repeat(np.arange(n), M), np.tile(np.arange(M), n),
                             self.matrix.ravel())


@dataclass(frozen=True, eq=False)
class SparseRatings:
    """(user, item, rating) triples stored as parallel index arrays.

    ``user_index[t]`` and ``item_index[t]`` point into ``users`` and
    ``items``.  Every listed user and item carries at least one rating and
    no (user, item) pair repeats.
    """

    users: tuple
    items: tuple
    user_index: np.ndarray
    item_index: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ui = np.asarray(self.user_index, dtype=np.int64)
        ii = np.asarray(self.item_index, dtype=np.int64)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "user_index", ui)
        object.__setattr__(self, "item_index", ii)
        object.__setattr__(self, "values", v)
        n, M = len(self.users), len(self.items)
        if not (ui.shape == ii.shape == v.shape) or ui.ndim != 1:
            raise ValueError("triple arrays must be one-dimensional and aligned")
        if v.size == 0:
            raise ValueError("no ratings")
        if ui.min() < 0 or ui.max() >= n or ii.min() < 0 or ii.max() >= M:
            raise ValueError("index out of range")
        if not np.all(np.isfinite(v)) or v.min() < 0 or v.max() > 1:
            raise ValueError("ratings must lie in [0, 1]")
        if np.bincount(ui, minlength=n).min() == 0:
            raise ValueError("every user needs at least one rating")
        if np.bincount(ii, minlength=M).min() == 0:
            raise ValueError("every item needs at least one rater")
        keys = ui * M + ii
        if np.unique(keys).size != keys.size:
            raise ValueError("duplicate (user, item) pair")

    @classmethod
    def from_triples(cls, triples: Iterable[tuple[Hashable, Hashable, float]]) -> "SparseRatings":
        """Build from ``(user, item, rating)`` tuples; ids keep first-seen order."""
        users: dict = {}
        items: dict = {}
        ui, ii, vals = [], [], []
        for u, i, r in triples:
            ui.append(users.setdefault(u, len(users)))
            ii.append(items.setdefault(i, len(items)))
            vals.append(float(r))
        return cls(tuple(users), tuple(items), np.array(ui, dtype=np.int64),
                   np.array(ii, dtype=np.int64), np.array(vals))

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_items(self) -> int:
        return len(self.items)

    def __len__(self) -> int:
        return int(self.values.size)

    def triples(self) -> Iterator[tuple]:
        for u, i, r in zip(self.user_index, self.item_index, self.values):
            yield self.users[u], self.items[i], float(r)

    def user_counts(self) -> np.ndarray:
        return np.bincount(self.user_index, minlength=self.n_users)

    def item_counts(self) -> np.ndarray:
        return np.bincount(self.item_index, minlength=self.n_items)

    @property
    def raters_of(self) -> dict:
        """item -> set of users who rated it."""
        out: dict = {i: set() for i in self.items}
        for u, i in zip(self.user_index, self.item_index):
            out[self.items[i]].add(self.users[u])
        return out

    @property
    def items_of(self) -> dict:
        """user -> set of items they rated."""
        out: dict = {u: set() for u in self.users}
        for u, i in zip(self.user_index, self.item_index):
            out[self.users[u]].add(self.items[i])
        return out

    def user_ratings(self) -> list[np.ndarray]:
        """Per-user rating arrays, in user order."""
        order = np.argsort(self.user_index, kind="stable")
        bounds = np.cumsum(self.user_counts())[:-1]
        return np.split(self.values[order], bounds)

    def is_dense(self) -> bool:
        return len(self) == self.n_users * self.n_items

    def to_complete(self) -> CompleteRatings:
        if not self.is_dense():
            raise ValueError("ratings are not complete")
        m = np.empty((self.n_users, self.n_items))
        m[self.user_index, self.item_index] = self.values
        return CompleteRatings(self.users, self.items, m)

    def subset(self, keep: np.ndarray) -> "SparseRatings":
        """Keep the triples selected by a boolean mask, reindexing ids."""
        ui, ii, v = self.user_index[keep], self.item_index[keep], self.values[keep]
        u_keep, ui = np.unique(ui, return_inverse=True)
        i_keep, ii = np.unique(ii, return_inverse=True)
        return SparseRatings(tuple(self.users[k] for k in u_keep),
                             tuple(self.items[k] for k in i_keep), ui, ii, v)


@dataclass(frozen=True, eq=False)
class ScoreTable:
    """Aggregate score per item produced by one estimator."""

    items: tuple
    values: np.ndarray
    estimator_tag: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "values", v)
        if v.shape != (len(self.items),):
            raise ValueError("one score per item required")
        if len(set(self.items)) != len(self.items):
            raise ValueError("duplicate item in score table")
        if self.estimator_tag not in ESTIMATOR_TAGS:
            raise ValueError(f"unknown estimator tag {self.estimator_tag!r}")

    def __getitem__(self, item) -> float:
        return float(self.values[self.items.index(item)])

    def __len__(self) -> int:
        return len(self.items)

    def as_dict(self) -> dict:
        return {i: float(v) for i, v in zip(self.items, self.values)}

    def aligned(self, items: Sequence) -> np.ndarray:
        """Scores reordered to follow ``items``."""
        pos = {i: k for k, i in enumerate(self.items)}
        try:
            return self.values[[pos[i] for i in items]]
        except KeyError as exc:
            raise ValueError(f"item {exc.args[0]!r} missing from score table") from None


def as_score_array(scores: ScoreTable | Mapping, items: Sequence) -> np.ndarray:
    if isinstance(scores, ScoreTable):
        return scores.aligned(items)
    try:
        return np.array([float(scores[i]) for i in items])
    except KeyError as exc:
        raise ValueError(f"item {exc.args[0]!r} missing from scores") from None
