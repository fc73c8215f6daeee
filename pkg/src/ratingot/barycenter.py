"""Wasserstein-2 Frechet means of empirical distributions on the line."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import EmpiricalDistribution, QuantileGrid, merge_levels, w2_distance


@dataclass(frozen=True)
class Barycenter:
    """Frechet mean together with the quantile grid it was built from."""

    distribution: EmpiricalDistribution
    source_count: int
    grid: QuantileGrid

    def quantile(self, p):
        return self.distribution.quantile(p)

    def cdf(self, x):
        return self.distribution.cdf(x)


def frechet_mean(dists: Sequence[EmpiricalDistribution]) -> Barycenter:
    """Equal-weight W2 barycenter, obtained by averaging quantile functions.

    Every input quantile function is a step function whose jumps sit at its
    cumulative weights, so the average is exact on the union of those
    breakpoints.  Adjacent levels with equal averaged values collapse into
    a single atom.
    """
    dists = list(dists)
    if not dists:
        raise ValueError("frechet_mean needs at least one distribution")
    levels = merge_levels(*(d.cumulative for d in dists))
    values = np.zeros_like(levels)
    for d in dists:
        values += d.quantile(levels)
    values /= len(dists)
    grid = QuantileGrid(levels, values)
    return Barycenter(grid.to_distribution(), len(dists), grid)


def frechet_functional(candidate: EmpiricalDistribution,
                       dists: Sequence[EmpiricalDistribution]) -> float:
    """Mean squared W2 distance from ``candidate`` to each distribution."""
    dists = list(dists)
    if not dists:
        raise ValueError("frechet_functional needs at least one distribution")
    return float(np.mean([w2_distance(d, candidate) ** 2 for d in dists]))
