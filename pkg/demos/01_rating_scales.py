"""
Personal rating scales and the consensus scale
==============================================

Two people can like the same film equally and still give it different
numbers.  Here each user's ratings form a distribution on [0, 1], and those
distributions are compared by optimal transport.
"""

import numpy as np

from ratingot import CompleteRatings, all_scores, from_samples, transport_map, w2_distance
from ratingot.estimators import consensus_barycenter

# A generous rater and a harsh one who agree on the order of four items.
generous = from_samples([0.7, 0.8, 0.9, 1.0])
harsh = from_samples([0.1, 0.2, 0.4, 0.5])
print("W2 distance between the two scales:", w2_distance(generous, harsh))

# The monotone transport map carries a rating on one scale to the same
# quantile on the other: the harsh user's 0.4 corresponds to a generous 0.9.
print("harsh 0.4 on the generous scale:", transport_map(harsh, generous, 0.4))

# %%
# The consensus scale is the barycenter of all the users' scales.  Its
# quantile function is the average of theirs.
ratings = CompleteRatings(("generous", "harsh"), ("a", "b", "c", "d"),
                          [[0.7, 0.8, 0.9, 1.0], [0.1, 0.2, 0.4, 0.5]])
bary = consensus_barycenter(ratings).distribution
print("consensus atoms:", bary.locations)

# %%
# When everybody agrees on the order, averaging the raw numbers and the
# transported ones give the same scores.
for tag, table in all_scores(ratings).items():
    print(f"{tag:>9}:", np.round(table.values, 3))

# %%
# A contrarian changes that picture.  The third user reverses the order.
ratings = CompleteRatings(("generous", "harsh", "contrarian"), ("a", "b", "c", "d"),
                          [[0.7, 0.8, 0.9, 1.0], [0.1, 0.2, 0.4, 0.5], [0.9, 0.6, 0.3, 0.2]])
for tag, table in all_scores(ratings).items():
    print(f"{tag:>9}:", np.round(table.values, 3))
