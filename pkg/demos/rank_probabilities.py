"""Why the compositional sub-problem generalizes from few samples: the chance
that a handful of sign patterns already spans the feature space.

Run:  python demos/rank_probabilities.py
"""

from modspec import (RankTrial, enumerate_full_rank_probability,
                     estimate_full_rank_probability,
                     exact_rank_probability_3features)

print("three compositional features (8 patterns):")
print(f"{'sample':>7} {'closed form':>12} {'enumeration':>12} {'monte carlo':>12}")
for size in range(1, 9):
    mc = estimate_full_rank_probability(RankTrial(3, size, trials=5000, seed=size))
    print(f"{size:>7} {exact_rank_probability_3features(size):>12.4f} "
          f"{enumerate_full_rank_probability(3, size):>12.4f} "
          f"{mc.estimate:>12.4f}")

print("\nfour compositional features (16 patterns):")
print(f"{'sample':>7} {'enumeration':>12} {'monte carlo':>12}")
for size in range(1, 17):
    mc = estimate_full_rank_probability(RankTrial(4, size, trials=5000, seed=100 + size))
    print(f"{size:>7} {enumerate_full_rank_probability(4, size):>12.4f} "
          f"{mc.estimate:>12.4f}")

print("\nA module that sees only the 3 compositional features usually "
      "generalizes from 3-4 examples;\nthe full task (rank 8) always needs "
      "every example.")
