"""Discrete probability distributions on [0, 1] and one-dimensional transport.

Every distribution here is a finite set of weighted atoms.  The CDF is the
right-continuous step function and the quantile function is the
left-continuous generalized inverse

    F^{-1}(p) = inf {x : F(x) >= p},   0 < p <= 1,

with no interpolation between atoms.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Union

import numpy as np

#: Slack used when comparing probability levels (cumulative weights).
LEVEL_TOL = 1e-12

#: Slack allowed on locations when checking they lie in [0, 1].
_RANGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Weighted atoms on [0, 1], sorted with distinct locations.

    Use :func:`from_samples` or :meth:`from_atoms` rather than the raw
    constructor; both merge duplicate locations and normalize weights.

    Attributes
    ----------
    locations : ndarray, shape (m,)
        Strictly increasing atom locations.
    weights : ndarray, shape (m,)
        Positive weights summing to one.
    cumulative : ndarray, shape (m,)
        Running sums of ``weights``; the last entry is exactly 1.0.
    """

    locations: np.ndarray
    weights: np.ndarray
    cumulative: np.ndarray

    @classmethod
    def from_atoms(cls, locations: Iterable[float], weights: Iterable[float] | None = None,
                   *, check_range: bool = True) -> "EmpiricalDistribution":
        """Build a distribution from (possibly unsorted, repeated) atoms.

        Weights default to equal mass per entry and are renormalized to sum
        to one.  Repeated locations are merged by summing their weights.
        """
        x = np.asarray(locations, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("a distribution needs at least one atom")
        if not np.all(np.isfinite(x)):
            raise ValueError("atom locations must be finite")
        if check_range and (x.min() < -_RANGE_TOL or x.max() > 1 + _RANGE_TOL):
            raise ValueError("atom locations must lie in [0, 1]")
        if weights is None:
            w = np.ones_like(x)
        else:
            w = np.asarray(weights, dtype=float).ravel()
            if w.shape != x.shape:
                raise ValueError("locations and weights differ in length")
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ValueError("weights must be finite and non-negative")
        keep = w > 0
        x, w = x[keep], w[keep]
        if x.size == 0:
            raise ValueError("total weight must be positive")

        order = np.argsort(x, kind="stable")
        x, w = x[order], w[order]
        locs, start = np.unique(x, return_index=True)
        merged = np.add.reduceat(w, start)
        merged = merged / merged.sum()
        cum = np.cumsum(merged)
        cum[-1] = 1.0
        return cls(locs, merged, cum)

    # -- basic queries -------------------------------------------------

    @property
    def size(self) -> int:
        return int(self.locations.size)

    def cdf(self, x):
        """Total weight of atoms at or below ``x`` (vectorized)."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.locations, x, side="right")
        out = np.where(idx > 0, self.cumulative[np.maximum(idx - 1, 0)], 0.0)
        return out if out.ndim else float(out)

    def quantile(self, p):
        """Generalized inverse ``inf{x : F(x) >= p}`` for ``p`` in (0, 1].

        Levels within ``LEVEL_TOL`` of a cumulative weight are treated as
        equal to it, so rounding in a sum of weights cannot push a level
        onto the next atom.
        """
        p = np.asarray(p, dtype=float)
        if np.any(p <= 0) or np.any(p > 1 + LEVEL_TOL):
            raise ValueError("quantile levels must lie in (0, 1]")
        idx = np.searchsorted(self.cumulative, p - LEVEL_TOL, side="left")
        out = self.locations[np.minimum(idx, self.size - 1)]
        return out if out.ndim else float(out)

    def mean(self) -> float:
        return float(np.dot(self.weights, self.locations))

    def variance(self) -> float:
        centred = self.locations - self.mean()
        return float(np.dot(self.weights, centred * centred))

    def is_point_mass(self) -> bool:
        return self.size == 1

    def allclose(self, other: "EmpiricalDistribution", atol: float = 1e-9) -> bool:
        """Atom-by-atom comparison of two distributions."""
        return (self.size == other.size
                and np.allclose(self.locations, other.locations, rtol=0, atol=atol)
                and np.allclose(self.weights, other.weights, rtol=0, atol=atol))

    def __repr__(self) -> str:
        atoms = ", ".join(f"({x:.6g}, {w:.6g})" for x, w in
                          zip(self.locations[:6], self.weights[:6]))
        more = ", ..." if self.size > 6 else ""
        return f"EmpiricalDistribution([{atoms}{more}])"


@dataclass(frozen=True)
class QuantileGrid:
    """A step quantile function given by its values at breakpoint levels.

    ``values[i]`` is the quantile on the half-open level interval
    ``(levels[i-1], levels[i]]`` (with ``levels[-1] == 1``).
    """

    levels: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.levels.shape != self.values.shape or self.levels.size == 0:
            raise ValueError("levels and values must be nonempty and aligned")
        if np.any(np.diff(self.values) < -1e-12):
            raise ValueError("quantile values must be nondecreasing")

    def to_distribution(self) -> EmpiricalDistribution:
        widths = np.diff(self.levels, prepend=0.0)
        return EmpiricalDistribution.from_atoms(self.values, widths)


def from_samples(values: Iterable[float]) -> EmpiricalDistribution:
    """Equal-weight distribution over observed values in [0, 1]."""
    return EmpiricalDistribution.from_atoms(list(values))


def cdf(d: EmpiricalDistribution, x):
    return d.cdf(x)


def quantile(d: EmpiricalDistribution, p):
    return d.quantile(p)


def mean(d: EmpiricalDistribution) -> float:
    return d.mean()


def variance(d: EmpiricalDistribution) -> float:
    return d.variance()


def merge_levels(*cumulatives: np.ndarray) -> np.ndarray:
    """Sorted union of cumulative-weight breakpoints, merged within LEVEL_TOL."""
    levels = np.sort(np.concatenate([np.asarray(c, dtype=float) for c in cumulatives]))
    if levels.size == 0:
        return levels
    keep = np.ones(levels.size, dtype=bool)
    # keep the right end of each cluster of nearly-equal levels
    keep[:-1] = np.diff(levels) > LEVEL_TOL
    levels = levels[keep]
    levels[-1] = 1.0
    return levels


def w2_distance(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    """Wasserstein-2 distance as the L2 distance between quantile functions.

    Both quantile functions are constant on each interval of the merged
    breakpoint partition, so the integral is an exact finite sum.
    """
    levels = merge_levels(a.cumulative, b.cumulative)
    widths = np.diff(levels, prepend=0.0)
    diff = a.quantile(levels) - b.quantile(levels)
    return float(np.sqrt(max(np.dot(widths, diff * diff), 0.0)))


def transport_map(source: EmpiricalDistribution, target: EmpiricalDistribution, x):
    """Monotone map ``F_target^{-1}(F_source(x))``.

    Points below every source atom have ``F_source(x) = 0``; they are sent
    to the smallest target atom so the map stays defined on all of [0, 1].
    """
    p = np.asarray(source.cdf(x), dtype=float)
    p = np.where(p > 0, p, target.cumulative[0])
    out = target.quantile(p)
    return out


ScoreMap = Union[Callable[[float], float], Mapping[float, float]]


def pushforward(d: EmpiricalDistribution, f: ScoreMap) -> EmpiricalDistribution:
    """Relocate every atom through ``f``; weights move with their atoms.

    ``f`` may be a callable or a mapping keyed by atom location.
    """
    if callable(f):
        moved = [float(f(x)) for x in d.locations]
    else:
        moved = []
        for x in d.locations:
            try:
                moved.append(float(f[x]))
            except KeyError:
                raise KeyError(f"score map undefined at atom {x!r}") from None
    return EmpiricalDistribution.from_atoms(moved, d.weights)
