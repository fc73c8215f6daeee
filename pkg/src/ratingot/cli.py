"""Command-line front end: ``ratingot {aggregate,concordance,evaluate,simulate}``.

Every run writes a ``manifest.json`` next to its outputs.  Numbers are
written with 12 significant digits, so identical runs give identical bytes.

Exit codes: 0 success, 2 invalid input, 3 nothing left after filtering,
4 degenerate (zero-variance) data.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, concordance, estimators, evaluation, incomplete, simulation
from .ingest import (EmptyResultError, IngestError, ScaleSpec, filter_min_counts, histogram,
                     load_ratings, read_triples)
from .ratings import ScoreTable, SparseRatings
from .simulation import fmt

EXIT_INPUT, EXIT_EMPTY, EXIT_DEGENERATE = 2, 3, 4
SCORE_COLUMNS = {"average": "avg", "primitive": "primitive", "rating": "rating"}
FILTERING = "iterated to a fixed point"


class UsageError(ValueError):
    pass


# -- output helpers ------------------------------------------------------

def _rounded(obj):
    """Round floats to 12 significant digits for stable JSON."""
    if isinstance(obj, dict):
        return {str(k): _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if math.isnan(x) else float(format(x, ".12g"))
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_rounded(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _prepare_out(args) -> Path:
    out = Path(args.out)
    if (out / "manifest.json").exists() and not args.force:
        raise UsageError(f"{out} already holds a run; pass --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, out: Path, **extra) -> dict:
    m = {
        "subcommand": args.command,
        "input": getattr(args, "input", None),
        "scale": {"scale_min": args.scale_min, "scale_max": args.scale_max},
        "filter": {"min_user_ratings": args.min_user_ratings,
                   "min_item_ratings": args.min_item_ratings,
                   "method": FILTERING},
        "seed": args.seed,
        "output_directory": str(out),
        "tool_version": __version__,
    }
    m.update(extra)
    return m


# -- shared pipeline -----------------------------------------------------

def _scale(args) -> ScaleSpec:
    try:
        return ScaleSpec(args.scale_min, args.scale_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(args, out: Path | None = None) -> SparseRatings:
    if not args.input:
        raise UsageError("--input is required")
    data = load_ratings(args.input, _scale(args))
    log: list = []
    data = filter_min_counts(data, args.min_user_ratings, args.min_item_ratings, log)
    if out is not None:
        write_csv(out / "removal_log.csv", ["entity_type", "id", "count"], log)
    return data


def score_tables(data: SparseRatings) -> dict[str, ScoreTable]:
    """Average, primitive and rating scores; the dense path is used when possible."""
    if data.is_dense():
        return estimators.all_scores(data.to_complete())
    return incomplete.all_incomplete_scores(data)


def _ranking_rows(table: ScoreTable, values: np.ndarray):
    ranking = evaluation.ranking_from_scores(table)
    order = np.argsort(ranking.ranks)
    return [[int(ranking.ranks[k]), table.items[k], values[k]] for k in order]


# -- subcommands ---------------------------------------------------------

def cmd_aggregate(args) -> int:
    out = _prepare_out(args)
    data = _load(args, out)
    scale = _scale(args)
    tables = score_tables(data)

    def shown(t: ScoreTable) -> np.ndarray:
        return t.values if args.normalized else scale.denormalize(t.values)

    cols = {tag: shown(t) for tag, t in tables.items()}
    write_csv(out / "scores.csv", ["item_id", *SCORE_COLUMNS.values()],
              [[item, *(cols[tag][k] for tag in SCORE_COLUMNS)]
               for k, item in enumerate(data.items)])
    for tag, t in tables.items():
        write_csv(out / f"ranking_{tag}.csv", ["rank", "item_id", "score"],
                  _ranking_rows(t, cols[tag]))
        write_csv(out / f"histogram_{tag}.csv", ["bin_lower", "count"],
                  histogram(t, args.bins, scale))
    write_json(out / "manifest.json", _manifest(
        args, out, estimators=list(SCORE_COLUMNS), bins=args.bins, normalized=args.normalized,
        users=data.n_users, items=data.n_items, ratings=len(data),
        complete=data.is_dense()))
    return 0


def _variance_summary(per_user: dict, width: float) -> dict:
    v = np.array(list(per_user.values()))
    return {"min": v.min(), "mean": v.mean(), "median": float(np.median(v)), "max": v.max(),
            "scale_factor": width ** 2}


def cmd_concordance(args) -> int:
    out = _prepare_out(args)
    extra: dict = {}
    if args.ranks:
        users, items, values = read_triples(args.input)
        raw = SparseRatings.from_triples(zip(users, items, np.zeros(len(values))))
        if not raw.is_dense():
            raise IngestError("rank input must give every user a rank for every item")
        ranks = np.empty((raw.n_users, raw.n_items))
        ranks[raw.user_index, raw.item_index] = [r for r, _ in values]
        try:
            ratings = concordance.rank_matrix_to_ratings(ranks)
        except ValueError as exc:
            raise IngestError(str(exc)) from None
        data = SparseRatings(raw.users, raw.items, raw.user_index, raw.item_index,
                             ratings.matrix[raw.user_index, raw.item_index])
        extra["kendalls_w"] = concordance.kendalls_w(ranks)
        width = 1.0
    else:
        data = _load(args, out)
        width = _scale(args).width
    report = concordance.concordance_report(data)
    body = {"w_scale": report.w_scale, "w_ratings": report.w_ratings,
            "users": data.n_users, "items": data.n_items,
            "per_user_variance": _variance_summary(report.per_user_variance, width),
            "barycenter_variance": report.barycenter_variance,
            "primitive_pushforward_variance": report.primitive_pushforward_variance,
            **extra}
    write_json(out / "concordance.json", body)
    write_json(out / "manifest.json", _manifest(args, out, ranks_input=args.ranks))
    return 0


def _read_ranking_file(path: str) -> evaluation.Ranking:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    try:
        return evaluation.Ranking(tuple(r["item_id"] for r in rows),
                                  np.array([int(r["rank"]) for r in rows]))
    except (KeyError, ValueError) as exc:
        raise IngestError(f"{path}: not a ranking file ({exc})") from None


def cmd_evaluate(args) -> int:
    out = _prepare_out(args)
    data = _load(args, out)
    scale = _scale(args)
    tables = score_tables(data)
    counts = evaluation.pairwise_counts(data)
    btl = evaluation.btl_scores(counts)
    tables["btl"] = btl

    def resolve(name: str):
        tag = {"avg": "average"}.get(name, name)
        if tag in tables:
            return tag, evaluation.ranking_from_scores(tables[tag]), tables[tag]
        ranking = _read_ranking_file(name)
        if set(ranking.items) != set(data.items):
            raise IngestError(f"{name}: ranking covers different items than the filtered data")
        scores = {i: -float(ranking[i]) for i in ranking.items}
        return name, ranking, scores

    (name_a, rank_a, score_a), (name_b, rank_b, score_b) = map(resolve, args.compare)
    rank_btl = evaluation.ranking_from_scores(btl)

    def agreement(scores):
        frac, agree, eligible = evaluation.pairwise_agreement(scores, counts, return_counts=True)
        return {"fraction": frac, "agreeing_pairs": agree, "eligible_pairs": eligible}

    utilities = {}
    for K in args.top_k:
        if K > data.n_items:
            raise UsageError(f"top-K of {K} exceeds the {data.n_items} items left after filtering")
        rows = {}
        for name, mine, other in ((name_a, rank_a, rank_b), (name_b, rank_b, rank_a)):
            u = evaluation.utility_report(data, mine, K, other)
            rows[name] = {"u1": float(scale.denormalize(u.u1)) if not args.normalized else u.u1,
                          "u2": u.u2, "u3": u.u3, "users": u.users}
        utilities[str(K)] = rows
    body = {
        "rankings": [name_a, name_b],
        "d1": evaluation.rank_distance_d1(rank_a, rank_b),
        "utilities": utilities,
        "pairwise_agreement": {name_a: agreement(score_a), name_b: agreement(score_b)},
        "btl": {"connected": btl.meta["connected"], "components": btl.meta["components"],
                "d1": {name_a: evaluation.rank_distance_d1(rank_btl, rank_a),
                       name_b: evaluation.rank_distance_d1(rank_btl, rank_b)},
                "pairwise_agreement": agreement(btl),
                "top": rank_btl.top(min(10, data.n_items))},
    }
    if args.random_baseline:
        body["random_baseline_d1"] = evaluation.random_ranking_d1(rank_a, draws=10_000,
                                                                  seed=args.seed)
    write_json(out / "evaluation.json", body)
    write_csv(out / "ranking_btl.csv", ["rank", "item_id", "score"],
              _ranking_rows(btl, btl.values))
    write_json(out / "manifest.json", _manifest(args, out, compare=list(args.compare),
                                                top_k=list(args.top_k)))
    return 0


EXPERIMENTS = ("fixed_alpha", "reversal", "rate_complete", "rate_incomplete", "gc_quantile", "gc_cdf")


def _alpha_law(spec):
    if spec is None:
        return simulation.reversal_alpha()
    kind = spec.get("kind")
    if kind == "fixed":
        return simulation.FixedAlpha(tuple(spec["values"]))
    if kind == "two_point":
        return simulation.TwoPointAlpha(spec.get("p_plus", 0.5))
    if kind == "gaussian_sign":
        return simulation.GaussianSignAlpha(**{k: v for k, v in spec.items() if k != "kind"})
    raise UsageError(f"unknown alpha law {kind!r}")


def run_experiment(name: str, cfg: dict, seed: int, workers: int) -> simulation.ExperimentTable:
    """Run a named experiment with keyword overrides from ``cfg``."""
    cfg = dict(cfg)
    try:
        if name == "fixed_alpha":
            return simulation.fixed_alpha_experiment(tuple(cfg.pop("alpha", (1.2, 0.8, -1.0))),
                                                   cfg.pop("M", 2000), **cfg)
        if name == "reversal":
            law = _alpha_law(cfg.pop("alpha_law", None))
            return simulation.reversal_experiment(seed=seed, alpha_law=law, workers=workers, **cfg)
        if name in ("rate_complete", "rate_incomplete"):
            config = simulation.SimulationConfig(
                atom_count=cfg.pop("M", 20), alpha_law=_alpha_law(cfg.pop("alpha_law", None)),
                replications=cfg.pop("replications", 200), seed=seed)
            default = [25, 100, 400, 1600] if name == "rate_complete" else [100, 400, 1600]
            ladder = cfg.pop("n_ladder", default)
            fn = (simulation.convergence_experiment if name == "rate_complete"
                  else simulation.incomplete_experiment)
            return fn(config, ladder, workers=workers, **cfg)
        if name in ("gc_quantile", "gc_cdf"):
            law = simulation.WarpedUniformLaw(cfg.pop("atoms", 1000), cfg.pop("amplitude", 1.0))
            ladder = cfg.pop("n_ladder", [3, 10, 100, 1000])
            fn = simulation.gc_experiment if name == "gc_quantile" else simulation.cdf_gc_experiment
            return fn(law, ladder, seed=seed, workers=workers, **cfg)
    except TypeError as exc:
        raise UsageError(f"bad configuration for {name}: {exc}") from None
    raise UsageError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")


def cmd_simulate(args) -> int:
    if args.experiment not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {args.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    cfg: dict = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
    out = _prepare_out(args)
    table = run_experiment(args.experiment, cfg, args.seed, args.threads)
    table.to_csv(out / f"{args.experiment}.csv")
    write_json(out / "summary.json", table.meta)
    write_json(out / "manifest.json", _manifest(args, out, experiment=args.experiment,
                                                config=cfg, threads=args.threads))
    return 0


# -- argument parsing ----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="rating CSV with header user_id,item_id,rating")
    common.add_argument("--scale-min", type=float, default=1.0)
    common.add_argument("--scale-max", type=float, default=10.0)
    common.add_argument("--min-user-ratings", type=int, default=10)
    common.add_argument("--min-item-ratings", type=int, default=10)
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="worker cap for simulations")
    common.add_argument("--bins", type=int, default=100)
    common.add_argument("--top-k", type=int, nargs="+", default=[50, 100])
    common.add_argument("--force", action="store_true", help="overwrite an earlier run")
    common.add_argument("--normalized", action="store_true",
                        help="report scores on [0, 1] instead of the source scale")

    parser = argparse.ArgumentParser(
        prog="ratingot", description="Aggregate item ratings by optimal transport between rating scales.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("aggregate", parents=[common], help="score and rank items")
    p = sub.add_parser("concordance", parents=[common], help="w_scale and w_ratings")
    p.add_argument("--ranks", action="store_true",
                   help="input holds ranks 1..M per user (1 = best); also report Kendall's W")
    p = sub.add_parser("evaluate", parents=[common], help="compare two rankings")
    p.add_argument("--compare", nargs=2, default=["rating", "avg"], metavar=("A", "B"),
                   help="estimator tags (avg, primitive, rating, btl) or ranking CSV files")
    p.add_argument("--random-baseline", action="store_true",
                   help="add the Monte Carlo d1 of a uniformly random ranking")
    p = sub.add_parser("simulate", parents=[common], help="run a simulation experiment")
    p.add_argument("experiment", help=", ".join(EXPERIMENTS))
    p.add_argument("--config", help="JSON object of keyword overrides")
    return parser


COMMANDS = {"aggregate": cmd_aggregate, "concordance": cmd_concordance,
            "evaluate": cmd_evaluate, "simulate": cmd_simulate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.bins < 1 or args.threads < 1 or min(args.top_k) < 1:
        print("error: --bins, --threads and --top-k must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except EmptyResultError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except concordance.DegenerateDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (IngestError, UsageError, ValueError, OSError) as exc:
        where = f"{args.input}: " if isinstance(exc, IngestError) and args.input else ""
        print(f"error: {where}{exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
