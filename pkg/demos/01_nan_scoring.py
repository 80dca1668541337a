#!/usr/bin/env python3
"""Scoring hidden-layer vectors with the negative-aware norm.

The score divides the l1 norm by the number of strictly positive
components. A plain norm can't tell a weakly-activated vector from a
sparsely-activated one; dividing by the active count makes deactivation
patterns visible, which is exactly the signal that separates object
queries from background.
"""

import numpy as np

from osodkit import active_count, l1_norm, nan_score, nan_scores

# A vector with two active components out of four.
z = [2.0, -1.0, 0.0, 3.0]
print("vector:            ", z)
print("l1 norm:           ", l1_norm(z))          # 2 + 1 + 0 + 3 = 6
print("active components: ", active_count(z))     # zeros count as inactive
print("nan score:         ", nan_score(z))        # 6 / 2 = 3.0

# Compare two vectors with the same l1 norm but different sparsity: the
# dense one spreads its mass, the sparse one concentrates it.
dense = np.full(8, 0.75)          # l1 = 6, 8 active -> score 0.75
sparse = [6.0, -0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]  # l1 = 6, 1 active -> 6.0
print("\ndense score: ", nan_score(dense))
print("sparse score:", nan_score(sparse))

# A fully deactivated vector reads as minimally object-like, not an error.
print("\nall-nonpositive vector:", nan_score([-1.0, -2.0, 0.0]))

# Scores are equivariant to positive scaling: doubling the activations
# doubles the score without changing which neurons are active.
z = np.array([0.5, -0.2, 1.5, -0.7])
print("\nscore(z):  ", nan_score(z))
print("score(2z): ", nan_score(2 * z))

# Batch form for whole dumps: one row per query.
rng = np.random.default_rng(0)
Z = rng.normal(size=(5, 16))
print("\nbatch scores:", np.round(nan_scores(Z), 3))
