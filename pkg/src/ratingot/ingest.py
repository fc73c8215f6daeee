"""Reading, normalizing and filtering rating files."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from .ratings import ScoreTable, SparseRatings

HEADER = ("user_id", "item_id", "rating")


class IngestError(ValueError):
    """Malformed or out-of-range input; carries the offending row and column."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.row = row
        self.column = column


class EmptyResultError(ValueError):
    """Filtering removed every rating."""


@dataclass(frozen=True)
class ScaleSpec:
    """Declared rating scale; ``normalize`` maps it affinely onto [0, 1]."""

    scale_min: float = 1.0
    scale_max: float = 10.0

    def __post_init__(self):
        if not self.scale_min < self.scale_max:
            raise ValueError("scale_min must be below scale_max")

    @property
    def width(self) -> float:
        return self.scale_max - self.scale_min

    def contains(self, r) -> np.ndarray | bool:
        return (self.scale_min <= r) & (r <= self.scale_max)

    def normalize(self, r):
        return (np.asarray(r, dtype=float) - self.scale_min) / self.width

    def denormalize(self, x):
        return np.asarray(x, dtype=float) * self.width + self.scale_min


def read_triples(path) -> tuple[list, list, list]:
    """Parse ``user_id,item_id,rating`` rows without any scale check.

    Rows are numbered as in the file, the header being row 1.  Identifiers
    are kept as strings; duplicate (user, item) pairs are rejected.
    """
    users, items, values = [], [], []
    seen: dict[tuple[str, str], int] = {}
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IngestError("file is empty", row=1)
        if tuple(h.strip() for h in header) != HEADER:
            raise IngestError(f"expected header {','.join(HEADER)}", row=1)
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise IngestError(f"expected 3 fields, found {len(row)}", row=row_no)
            user, item, raw = (c.strip() for c in row)
            if not user:
                raise IngestError("empty identifier", row=row_no, column="user_id")
            if not item:
                raise IngestError("empty identifier", row=row_no, column="item_id")
            try:
                r = float(Decimal(raw))
            except InvalidOperation:
                raise IngestError(f"not a decimal number: {raw!r}", row=row_no,
                                  column="rating") from None
            if not np.isfinite(r):
                raise IngestError(f"not a finite number: {raw!r}", row=row_no, column="rating")
            key = (user, item)
            if key in seen:
                raise IngestError(f"duplicate rating of item {item!r} by user {user!r} "
                                  f"(first at row {seen[key]})", row=row_no)
            seen[key] = row_no
            users.append(user)
            items.append(item)
            values.append((r, row_no))
    if not values:
        raise IngestError("no rating rows")
    return users, items, values


def load_ratings(path, scale: ScaleSpec = ScaleSpec()) -> SparseRatings:
    """Read a rating file and normalize its ratings onto [0, 1]."""
    users, items, values = read_triples(path)
    for r, row_no in values:
        if not scale.contains(r):
            raise IngestError(f"rating {r:g} outside [{scale.scale_min:g}, {scale.scale_max:g}]",
                              row=row_no, column="rating")
    normalized = scale.normalize([r for r, _ in values])
    return SparseRatings.from_triples(zip(users, items, normalized))


def filter_min_counts(data: SparseRatings, min_user: int, min_item: int,
                      log: list | None = None) -> SparseRatings:
    """Drop users and items with too few ratings until neither rule bites.

    Each sweep removes every user below ``min_user`` and then every item
    below ``min_item``, counted on what the sweep left.  Removal only ever
    lowers counts, so the result is the largest sub-dataset meeting both
    thresholds whatever the sweep order.  Removed entities are appended to
    ``log`` as ``(entity_type, id, count_at_removal)``.
    """
    if min_user < 1 or min_item < 1:
        raise ValueError("thresholds must be at least 1")
    keep = np.ones(len(data.values), dtype=bool)
    ui, ii = data.user_index, data.item_index
    while True:
        uc = np.bincount(ui[keep], minlength=data.n_users)
        bad_u = (uc > 0) & (uc < min_user)
        if log is not None:
            log.extend(("user", data.users[k], int(uc[k])) for k in np.flatnonzero(bad_u))
        keep &= ~bad_u[ui]
        ic = np.bincount(ii[keep], minlength=data.n_items)
        bad_i = (ic > 0) & (ic < min_item)
        if log is not None:
            log.extend(("item", data.items[k], int(ic[k])) for k in np.flatnonzero(bad_i))
        keep &= ~bad_i[ii]
        if not bad_u.any() and not bad_i.any():
            break
    if not keep.any():
        raise EmptyResultError(f"no ratings left after requiring {min_user} per user "
                               f"and {min_item} per item")
    if keep.all():
        return data
    return data.subset(keep)


def histogram(scores: ScoreTable, bins: int, scale: ScaleSpec = ScaleSpec()) -> list[tuple[float, int]]:
    """Equal-width bins over the declared scale; the last bin is closed."""
    if bins < 1:
        raise ValueError("bins must be at least 1")
    counts, edges = np.histogram(scale.denormalize(scores.values), bins=bins,
                                 range=(scale.scale_min, scale.scale_max))
    return [(float(e), int(c)) for e, c in zip(edges[:-1], counts)]
