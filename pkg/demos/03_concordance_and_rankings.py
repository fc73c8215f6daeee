"""
How much do users agree, and which ranking serves them better?
==============================================================

The bundled 50 x 40 synthetic fixture goes through the whole pipeline.
After sparse users and items are filtered out, the rating ranking is
compared with the plain average.
"""

from pathlib import Path

from ratingot import (btl_scores, concordance_report, filter_min_counts, load_ratings,
                      pairwise_agreement, pairwise_counts, rank_distance_d1, ranking_from_scores,
                      utility_report)
from ratingot.incomplete import all_incomplete_scores

fixture = Path(__file__).resolve().parents[1] / "tests" / "data" / "fixture_50x40.csv"
log = []
data = filter_min_counts(load_ratings(fixture), 10, 10, log)
print(f"{data.n_users} users and {data.n_items} items left; removed {len(log)} entities")

# %%
# w_scale near 1 says users share a similar spread of ratings; w_ratings
# is lower because a quarter of the synthetic users reverse the order.
report = concordance_report(data)
print(f"w_scale = {report.w_scale:.3f}, w_ratings = {report.w_ratings:.3f}")

# %%
scores = all_incomplete_scores(data)
by_rating = ranking_from_scores(scores["rating"])
by_average = ranking_from_scores(scores["average"])
print("top 5 by rating: ", by_rating.top(5))
print("top 5 by average:", by_average.top(5))
print("d1 between them:", round(rank_distance_d1(by_rating, by_average), 4))

# %%
# Utilities of each top-10 list, judged by the users' own ratings.
for name, mine, other in (("rating", by_rating, by_average), ("average", by_average, by_rating)):
    u = utility_report(data, mine, 10, other)
    print(f"{name:>8}: u1={u.u1:.3f} u2={u.u2:.3f} u3={u.u3:.3f} over {u.users} users")

# %%
# A ranking built only from pairwise wins gives an outside reference point.
counts = pairwise_counts(data)
btl = btl_scores(counts)
print("agreement with pairwise majorities:")
for name, s in (("rating", scores["rating"]), ("average", scores["average"]), ("btl", btl)):
    print(f"  {name:>8}: {pairwise_agreement(s, counts):.3f}")
