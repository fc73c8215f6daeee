"""Aggregate item ratings by optimal transport between users' rating scales.

Each user's ratings form a distribution on [0, 1].  Ratings are moved onto a
consensus scale, the one-dimensional Wasserstein-2 barycenter of those
distributions, before they are averaged per item.
"""
from .barycenter import Barycenter, frechet_functional, frechet_mean
from .concordance import (ConcordanceReport, DegenerateDataError, concordance_limits,
                          concordance_report, kendalls_w, ranks_to_ratings)
from .distributions import (EmpiricalDistribution, QuantileGrid, from_samples, pushforward,
                            transport_map, w2_distance)
from .estimators import (LossDecomposition, all_scores, average_scores, l2_loss,
                         loss_decomposition, primitive_scores, rating_scores)
from .evaluation import (PairwiseCounts, Ranking, UtilityReport, btl_scores, pairwise_agreement,
                         pairwise_counts, rank_distance_d1, ranking_from_scores, utility_report)
from .incomplete import (all_incomplete_scores, incomplete_average_scores,
                         incomplete_primitive_scores, incomplete_rating_scores)
from .ingest import EmptyResultError, IngestError, ScaleSpec, filter_min_counts, histogram, load_ratings
from .ratings import CompleteRatings, ScoreTable, SparseRatings

__version__ = "0.1.0"
