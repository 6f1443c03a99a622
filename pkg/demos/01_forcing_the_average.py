"""A single omniscient worker steers any fixed-weight linear rule at will.

The crafted proposal (target - sum_{i != b} w_i V_i) / w_b makes the
weighted combination land exactly on the chosen target, no matter how
absurd the target is.  Krum, fed the same proposals, ignores the crafted
vector because it is far from every honest one.
"""

import numpy as np

from byzgrad import (AdversaryView, AggregationInput, krum_select, linear_combination,
                     omniscient_linear_attack)

rng = np.random.default_rng(7)
n, d = 8, 5
weights = np.full(n, 1.0 / n)  # plain averaging

honest = tuple((wid, rng.normal(loc=1.0, scale=0.1, size=d)) for wid in range(1, n))
view = AdversaryView(round=0, parameter_vector=np.zeros(d), correct_vectors=honest)

print(f"{n - 1} honest workers propose vectors near (1, ..., 1); worker {n} is Byzantine.\n")

for magnitude in (1.0, 1e3, 1e9):
    target = np.zeros(d)
    target[0] = -magnitude
    crafted = omniscient_linear_attack(view, weights, byz_id=n, target=target)
    proposals = [vec for _, vec in honest] + [crafted]
    inp = AggregationInput.from_vectors(proposals, f=1)
    forced = linear_combination(inp, weights)
    err = np.linalg.norm(forced - target) / np.linalg.norm(target)
    winner = krum_select(inp).selected_ids[0]
    print(f"target first coordinate {-magnitude:>12.0e}:"
          f"  average lands on target (rel err {err:.1e}),"
          f"  krum selects honest worker {winner}")

print("\nThe average obeys the attacker exactly; krum never picks the crafted vector.")
