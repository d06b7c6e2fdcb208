"""
Cardinality distribution and set scores
=======================================

How many labels does a sample carry? The model answers with a Dirichlet-
Categorical pmf over 0..M whose concentrations come from the network and whose
counts come from the training histogram.
"""

import numpy as np

from jointset import CardinalityStats, dc_pmf, set_log_density

# Ten training samples over M = 3 labels: two empty, five singletons, three pairs.
stats = CardinalityStats([2, 5, 3, 0])

# A network that is unsure gives flat concentrations; the histogram dominates.
print("flat alpha   :", np.round(dc_pmf([1.0, 1.0, 1.0, 1.0], stats), 3))

# Large concentrations on m=3 override the histogram.
print("confident m=3:", np.round(dc_pmf([0.1, 0.1, 0.1, 50.0], stats), 3))

# A set's log-density adds the cardinality term, one log u per element and
# the log-probability of each chosen label.
logits = np.array([2.0, 0.3, -1.5])
alpha = np.array([1.0, 1.0, 1.0, 1.0])
for labels in ([], [0], [0, 1], [0, 1, 2]):
    score = set_log_density(labels, logits, alpha, stats, u=2.36)
    print(f"{str(labels):<10} {score:8.4f}")
