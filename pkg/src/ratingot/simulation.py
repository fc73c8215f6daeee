"""Synthetic rating data and Monte Carlo experiments.

Users rate the atoms of a consensus quality distribution mu through affine
scale functions ``phi_k(x) = alpha_k (x - 1/2) + 1/2``; a negative
``alpha_k`` reverses the user's preference order.  Replication ``r`` of a
configuration with seed ``s`` always draws from ``default_rng([s, r])``.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate, optimize, stats

from . import estimators, incomplete
from .barycenter import frechet_mean
from .distributions import EmpiricalDistribution, merge_levels
from .ratings import CompleteRatings, SparseRatings

log = logging.getLogger(__name__)


# -- alpha laws ----------------------------------------------------------

@dataclass(frozen=True)
class FixedAlpha:
    """Deterministic scale factors; user k gets ``values[k % len(values)]``."""

    values: tuple

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return np.resize(np.asarray(self.values, dtype=float), size)

    @property
    def bound(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class TwoPointAlpha:
    """alpha = +1 with probability ``p_plus``, else -1."""

    p_plus: float = 0.5

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return np.where(rng.random(size) < self.p_plus, 1.0, -1.0)

    bound = 1.0


@dataclass(frozen=True)
class GaussianSignAlpha:
    """alpha = eps * Z with P(eps = 1) = ``p_plus`` and Z ~ Normal(mean, variance)
    truncated to ``|Z| <= bound``.

    The truncation moves E|Z| slightly; the normal's location is shifted so
    that the truncated law keeps ``E|Z| = mean``.
    """

    p_plus: float = 0.75
    mean: float = 1.0
    variance: float = 1.0 / 16.0
    bound: float = 2.0
    location: float = field(init=False)

    def __post_init__(self):
        sd = math.sqrt(self.variance)
        loc = optimize.brentq(lambda m: _truncated_abs_mean(m, sd, self.bound) - self.mean,
                              self.mean - 1.0, self.mean + 1.0, xtol=1e-15)
        object.__setattr__(self, "location", loc)
        if loc != self.mean:
            log.debug("truncated normal location corrected by %.3e", loc - self.mean)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        sd = math.sqrt(self.variance)
        z = np.empty(0)
        while z.size < size:
            draw = rng.normal(self.location, sd, size=max(size - z.size, 16) + 16)
            z = np.concatenate([z, draw[np.abs(draw) <= self.bound]])
        eps = np.where(rng.random(size) < self.p_plus, 1.0, -1.0)
        return eps * z[:size]


def _truncated_abs_mean(loc: float, sd: float, bound: float) -> float:
    dist = stats.norm(loc, sd)
    mass = dist.cdf(bound) - dist.cdf(-bound)
    num, _ = integrate.quad(lambda z: abs(z) * dist.pdf(z), -bound, bound,
                            points=[0.0], epsabs=1e-14, epsrel=1e-13, limit=200)
    return num / mass


def reversal_alpha() -> GaussianSignAlpha:
    """Gaussian scaling Normal(1, 1/16) with a 1/4 chance of reversal."""
    return GaussianSignAlpha(p_plus=0.75, mean=1.0, variance=1.0 / 16.0)


# -- configurations ------------------------------------------------------

def grid_atoms(M: int, low: float = 0.25, high: float = 0.75) -> np.ndarray:
    """Midpoints of M equal cells of [low, high]: M equal-weight atoms
    approximating the uniform distribution on that interval."""
    return low + (high - low) * (np.arange(M) + 0.5) / M


@dataclass(frozen=True)
class SimulationConfig:
    atom_count: int = 20
    n_users: int = 100
    alpha_law: object = field(default_factory=reversal_alpha)
    atom_support: tuple | None = None
    replications: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.atom_support is None and self.atom_count < 2:
            raise ValueError("need at least two atoms")
        if self.n_users < 1:
            raise ValueError("need at least one user")
        atoms = self.atoms
        reach = float(np.max(np.abs(atoms - 0.5))) * self.alpha_law.bound
        if reach > 0.5 + 1e-12:
            raise ValueError("alpha law and atom support push ratings outside [0, 1]")

    @property
    def atoms(self) -> np.ndarray:
        if self.atom_support is not None:
            a = np.asarray(self.atom_support, dtype=float)
            if np.unique(a).size != a.size or a.size < 2:
                raise ValueError("atom support needs at least two distinct atoms")
            return np.sort(a)
        return grid_atoms(self.atom_count)

    @property
    def M(self) -> int:
        return int(self.atoms.size)

    def rng(self, replication: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, replication])


@dataclass(frozen=True)
class AssignmentConfig:
    """Each item is rated by ``raters_per_item`` users chosen uniformly at
    random, independently across items and of the users' scale functions."""

    raters_per_item: int | Sequence[int]

    def counts(self, M: int) -> np.ndarray:
        q = np.asarray(self.raters_per_item, dtype=np.int64)
        return np.broadcast_to(q, (M,)).copy()


# -- generators ----------------------------------------------------------

def _scale(atoms: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    r = alpha[:, None] * (atoms[None, :] - 0.5) + 0.5
    return np.clip(r, 0.0, 1.0)  # only trims rounding at the interval ends


def draw_complete(config: SimulationConfig, rng: np.random.Generator):
    """One complete data set plus the alpha values behind it."""
    atoms = config.atoms
    alpha = config.alpha_law.sample(config.n_users, rng)
    ratings = CompleteRatings(tuple(range(config.n_users)), tuple(range(atoms.size)),
                              _scale(atoms, alpha))
    return ratings, dict(enumerate(atoms.tolist())), alpha


def generate_complete(config: SimulationConfig, replication: int = 0):
    """``(CompleteRatings, truth)`` for one replication of ``config``."""
    ratings, truth, _ = draw_complete(config, config.rng(replication))
    return ratings, truth


def draw_incomplete(config: SimulationConfig, assignment: AssignmentConfig,
                    rng: np.random.Generator):
    ratings, truth, alpha = draw_complete(config, rng)
    n, M = config.n_users, config.M
    q = assignment.counts(M)
    if q.max() > n or q.min() < 1:
        raise ValueError("raters per item must lie in 1..n_users")
    users = [rng.choice(n, size=int(q[j]), replace=False) for j in range(M)]
    ui = np.concatenate(users)
    ii = np.repeat(np.arange(M), q)
    order = np.lexsort((ii, ui))
    ui, ii = ui[order], ii[order]
    present, ui = np.unique(ui, return_inverse=True)  # users who drew no item drop out
    data = SparseRatings(tuple(int(u) for u in present), ratings.items, ui, ii,
                         ratings.matrix[present[ui], ii])
    return data, truth, alpha


def generate_incomplete(config: SimulationConfig, assignment: AssignmentConfig,
                        replication: int = 0):
    """``(SparseRatings, truth)``: complete generation, then random rater subsets."""
    data, truth, _ = draw_incomplete(config, assignment, config.rng(replication))
    return data, truth


# -- consensus gap -------------------------------------------------------

def consensus_curve(config: SimulationConfig, draws: int = 100_000, seed: int = 0,
                    raters_per_item: int | None = None, batch: int = 10_000) -> np.ndarray:
    """Monte Carlo estimate of ``E[F_mu^{-1}(F_1(phi_1(x)))]`` at every atom.

    With ``raters_per_item = q`` the user's CDF is the empirical CDF of the
    items they were assigned, each item independently with probability
    ``q / n`` (conditioned on at least one item).
    """
    rng = np.random.default_rng([seed, 7919])
    atoms = config.atoms
    M = atoms.size
    total = np.zeros(M)
    done = 0
    while done < draws:
        b = min(batch, draws - done)
        alpha = config.alpha_law.sample(b, rng)
        r = _scale(atoms, alpha)
        if raters_per_item is None or raters_per_item >= config.n_users:
            rated = np.ones((b, M), dtype=bool)
        else:
            p = raters_per_item / config.n_users
            rated = rng.random((b, M)) < p
            empty = ~rated.any(axis=1)
            while empty.any():
                rated[empty] = rng.random((int(empty.sum()), M)) < p
                empty = ~rated.any(axis=1)
        m = rated.sum(axis=1)
        below = ((r[:, None, :] <= r[:, :, None]) & rated[:, None, :]).sum(axis=2)
        level_idx = np.ceil(below * M / m[:, None] - 1e-9).astype(np.int64) - 1
        total += atoms[np.clip(level_idx, 0, M - 1)].sum(axis=0)
        done += b
    return total / draws


def consensus_gap(curve: np.ndarray) -> float:
    """``min {g(y) - g(x) : x < y atoms}``; negative if g is not increasing."""
    running_max = np.maximum.accumulate(curve[:-1])
    return float(np.min(curve[1:] - running_max))


def sufficient_raters(delta: float, n: int) -> int:
    """``ceil(64 log(n) / delta^2)`` raters per item, capped at n."""
    if delta <= 0:
        return n
    return int(min(n, math.ceil(64.0 * math.log(n) / delta ** 2)))


# -- losses --------------------------------------------------------------

def l2_loss_to_truth(scores: np.ndarray, atoms: np.ndarray) -> float:
    """``||E - id||`` in L2(mu) with equal weight on each atom."""
    return float(np.sqrt(np.mean((np.asarray(scores) - atoms) ** 2)))


def complete_losses(data: CompleteRatings, atoms: np.ndarray) -> dict[str, float]:
    tables = estimators.all_scores(data)
    return {tag: l2_loss_to_truth(t.values, atoms) for tag, t in tables.items()}


def incomplete_losses(data: SparseRatings, atoms: np.ndarray) -> dict[str, float]:
    tables = incomplete.all_incomplete_scores(data)
    return {tag: l2_loss_to_truth(t.aligned(range(atoms.size)), atoms)
            for tag, t in tables.items()}


# -- tables --------------------------------------------------------------

def fmt(x) -> str:
    """Fixed numeric formatting used in every emitted table."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if math.isnan(x):
            return ""
        return format(float(x), ".12g")
    return str(x)


@dataclass
class ExperimentTable:
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)

    def column(self, name: str, **where) -> list:
        k = self.columns.index(name)
        sel = [self.columns.index(c) for c in where]
        return [row[k] for row in self.rows
                if all(row[s] == v for s, v in zip(sel, where.values()))]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([fmt(v) for v in row])


def loglog_slope(ns: Sequence[float], values: Sequence[float]) -> float:
    return float(np.polyfit(np.log(ns), np.log(values), 1)[0])


def _map(fn: Callable, args: Iterable, workers: int) -> list:
    if workers <= 1:
        return [fn(a) for a in args]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args))


# -- experiments ---------------------------------------------------------

RATE_COLUMNS = ["estimator", "n", "replications", "mean_loss", "sd_loss", "bound_if_any"]


def convergence_experiment(config: SimulationConfig, n_ladder: Sequence[int],
                           estimator_tags: Sequence[str] = ("rating", "average", "primitive"),
                           replications: int | None = None, gap_draws: int = 100_000,
                           workers: int = 1) -> ExperimentTable:
    """Mean L2(mu) loss of each estimator on complete data across ``n_ladder``.

    The ``rating`` rows carry the bound ``1/(2 sqrt n) + 4 M exp(-n delta^2 / 8)``
    with the consensus gap delta estimated by Monte Carlo.
    """
    reps = replications or config.replications
    atoms = config.atoms
    delta = consensus_gap(consensus_curve(config, draws=gap_draws, seed=config.seed))
    rows = []
    per_n: dict = {}
    for n in n_ladder:
        cfg = replace(config, n_users=int(n))

        def one(r, cfg=cfg):
            data, _, _ = draw_complete(cfg, np.random.default_rng([cfg.seed, int(cfg.n_users), r]))
            return complete_losses(data, atoms)

        per_n[n] = _map(one, range(reps), workers)
    slopes = {}
    for tag in estimator_tags:
        means = []
        for n in n_ladder:
            losses = np.array([d[tag] for d in per_n[n]])
            bound = (0.5 / math.sqrt(n) + 4 * atoms.size * math.exp(-n * delta ** 2 / 8)
                     if tag == "rating" and delta > 0 else float("nan"))
            rows.append([tag, int(n), reps, losses.mean(), losses.std(ddof=1) if reps > 1 else 0.0,
                         bound])
            means.append(losses.mean())
        slopes[tag] = loglog_slope(n_ladder, means) if min(means) > 0 else float("nan")
    return ExperimentTable(RATE_COLUMNS, rows, {"slopes": slopes, "delta": delta})


def incomplete_experiment(config: SimulationConfig, n_ladder: Sequence[int],
                          replications: int | None = None, gap_draws: int = 100_000,
                          raters: Callable[[float, int], int] = sufficient_raters,
                          workers: int = 1) -> ExperimentTable:
    """Mean L2(mu) loss of the incomplete-data rating estimator.

    Per n, the raters per item follow ``raters(delta, n)``, with delta the
    consensus gap of the incomplete-data curve at that assignment rate.  Rows
    carry the bound ``7 M / sqrt(n)``.
    """
    reps = replications or config.replications
    atoms = config.atoms
    M = atoms.size
    base_delta = consensus_gap(consensus_curve(config, draws=gap_draws, seed=config.seed))
    rows = []
    meta: dict = {"delta": {}, "raters_per_item": {}}
    for n in n_ladder:
        cfg = replace(config, n_users=int(n))
        q = raters(base_delta, int(n))
        delta = base_delta
        if q < n:
            delta = consensus_gap(consensus_curve(cfg, draws=gap_draws, seed=config.seed,
                                                  raters_per_item=q))
            q = raters(delta, int(n))
        meta["delta"][int(n)] = delta
        meta["raters_per_item"][int(n)] = q
        assignment = AssignmentConfig(q)

        def one(r, cfg=cfg, assignment=assignment):
            rng = np.random.default_rng([cfg.seed, int(cfg.n_users), r])
            data, _, _ = draw_incomplete(cfg, assignment, rng)
            return incomplete_losses(data, atoms)["rating"]

        losses = np.array(_map(one, range(reps), workers))
        rows.append(["rating", int(n), reps, losses.mean(),
                     losses.std(ddof=1) if reps > 1 else 0.0, 7 * M / math.sqrt(n)])
    return ExperimentTable(RATE_COLUMNS, rows, meta)


def fixed_alpha_experiment(alpha: Sequence[float] = (1.2, 0.8, -1.0),
                         M: int = 2000) -> ExperimentTable:
    """Losses of A, R0 and R for fixed scale factors against their closed forms.

    On a grid symmetric about 1/2, each estimator is an affine map
    ``s (x - 1/2) + 1/2`` of the truth, so its loss is ``|s - 1| sd(mu)``
    with s = mean(alpha) for A, mean|alpha| mean(sgn alpha) for R0 and
    mean|alpha| for R (the last when mean(sgn alpha) > 0).
    """
    a = np.asarray(alpha, dtype=float)
    config = SimulationConfig(atom_count=M, n_users=a.size, alpha_law=FixedAlpha(tuple(a)))
    data, _ = generate_complete(config)
    atoms = config.atoms
    losses = complete_losses(data, atoms)
    sd = float(atoms.std())
    slopes = {"average": a.mean(),
              "primitive": np.abs(a).mean() * np.sign(a).mean(),
              "rating": np.abs(a).mean() if np.sign(a).mean() > 0 else float("nan")}
    rows = [[tag, losses[tag], abs(slopes[tag] - 1) * sd] for tag in ("average", "primitive", "rating")]
    return ExperimentTable(["estimator", "loss", "closed_form"], rows,
                           {"M": M, "alpha": a.tolist(), "sd_mu": sd})


def reversal_experiment(M: int = 500, n: int = 200, replications: int = 100, seed: int = 0,
                         alpha_law=None, workers: int = 1) -> ExperimentTable:
    """Per-replication L2 losses of A, R0 and R under the reversal law."""
    config = SimulationConfig(atom_count=M, n_users=n,
                              alpha_law=alpha_law or reversal_alpha(), seed=seed)
    atoms = config.atoms

    def one(r):
        data, _, _ = draw_complete(config, config.rng(r))
        return complete_losses(data, atoms)

    results = _map(one, range(replications), workers)
    rows = [[r, d["average"], d["primitive"], d["rating"]] for r, d in enumerate(results)]
    wins = float(np.mean([d["rating"] < d["average"] for d in results]))
    return ExperimentTable(["replication", "loss_average", "loss_primitive", "loss_rating"],
                           rows, {"rating_beats_average": wins})


# -- Glivenko-Cantelli experiments ---------------------------------------

@dataclass(frozen=True)
class WarpedUniformLaw:
    """Random measure with quantile ``t + a t (1 - t)``, ``a ~ Uniform[-amp, amp]``,
    discretized at ``atoms`` equal-weight levels.  Its population barycenter
    has quantile ``t``: equal weight on the level midpoints."""

    atoms: int = 1000
    amplitude: float = 1.0

    def __post_init__(self):
        if not 0 <= self.amplitude <= 1:
            raise ValueError("amplitude must lie in [0, 1] to keep quantiles monotone")

    def _t(self) -> np.ndarray:
        return (np.arange(self.atoms) + 0.5) / self.atoms

    def sample(self, rng: np.random.Generator) -> EmpiricalDistribution:
        t = self._t()
        a = rng.uniform(-self.amplitude, self.amplitude)
        return EmpiricalDistribution.from_atoms(t + a * t * (1 - t))

    def barycenter(self) -> EmpiricalDistribution:
        return EmpiricalDistribution.from_atoms(self._t())


@dataclass(frozen=True)
class FixedLaw:
    """Degenerate random measure: always the same distribution."""

    distribution: EmpiricalDistribution

    def sample(self, rng: np.random.Generator) -> EmpiricalDistribution:
        return self.distribution

    def barycenter(self) -> EmpiricalDistribution:
        return self.distribution


def sup_quantile_distance(a: EmpiricalDistribution, b: EmpiricalDistribution,
                          grid_size: int = 10_000) -> float:
    """``sup_p |F_a^{-1}(p) - F_b^{-1}(p)|`` over breakpoints plus a level grid."""
    grid = np.arange(1, grid_size + 1) / grid_size
    levels = merge_levels(a.cumulative, b.cumulative, grid)
    return float(np.max(np.abs(a.quantile(levels) - b.quantile(levels))))


def sup_cdf_distance(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    """``sup_x |F_a(x) - F_b(x)|``, attained at some atom of either measure."""
    xs = np.union1d(a.locations, b.locations)
    return float(np.max(np.abs(a.cdf(xs) - b.cdf(xs))))


def gc_quantile_bound(n: int) -> float:
    return 4.0 * math.sqrt(math.log(n) / n) if n >= 2 else float("nan")


def _gc_runs(law, n_ladder, replications, seed, metric, workers):
    target = law.barycenter()
    out = {}
    for n in n_ladder:
        def one(r, n=n):
            rng = np.random.default_rng([seed, int(n), r])
            bary = frechet_mean([law.sample(rng) for _ in range(int(n))]).distribution
            return metric(bary, target)
        out[n] = np.array(_map(one, range(replications), workers))
    return out


def gc_experiment(law, n_ladder: Sequence[int], replications: int = 100, seed: int = 0,
                  grid_size: int = 10_000, workers: int = 1) -> ExperimentTable:
    """Mean sup distance between empirical and population barycenter quantiles."""
    runs = _gc_runs(law, n_ladder, replications, seed,
                    lambda a, b: sup_quantile_distance(a, b, grid_size), workers)
    rows = [[int(n), replications, v.mean(), v.std(ddof=1) if replications > 1 else 0.0,
             gc_quantile_bound(int(n))] for n, v in runs.items()]
    return ExperimentTable(["n", "replications", "mean_sup_distance", "sd_sup_distance",
                            "bound_if_any"], rows)


def cdf_gc_experiment(law, n_ladder: Sequence[int], replications: int = 100, seed: int = 0,
                      workers: int = 1) -> ExperimentTable:
    """Mean sup distance between empirical and population barycenter CDFs."""
    runs = _gc_runs(law, n_ladder, replications, seed, sup_cdf_distance, workers)
    rows = [[int(n), replications, v.mean(), v.std(ddof=1) if replications > 1 else 0.0,
             float("nan")] for n, v in runs.items()]
    return ExperimentTable(["n", "replications", "mean_sup_distance", "sd_sup_distance",
                            "bound_if_any"], rows)
