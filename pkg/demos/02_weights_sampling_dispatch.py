"""Confidence weights, instance sampling and soft pseudo-labels on a toy bag.

Walks through the three pieces that sit between the data and the loss:
initial weights from label frequencies, sampling proportional to the best
labeled weight, and turning weights into per-instance soft labels.
"""

import numpy as np

from spmiml.core import Bag, Instance, label_vector
from spmiml.dispatcher import dispatch
from spmiml.sampler import build_store, init_global_freq, sample_instances, score

K = 4
bags = [
    Bag("a", [Instance(j, [float(j)]) for j in range(5)], label_vector([0, 2], K)),
    Bag("b", [Instance(j, [float(j)]) for j in range(3)], label_vector([0], K)),
]

print("global init (class counts 2,0,1,0):", np.round(init_global_freq(bags), 4))
store = build_store(bags, "label_level", "per_sample_freq")
print("per-sample init for bag a:", np.round(store.get("a", 0), 4))

# pretend training has moved some weights around
store.set_bag("a", [[0.9, 0.1, 0.2, 0.0],
                    [0.1, 0.0, 0.7, 0.0],
                    [0.0, 0.3, 0.05, 0.4],
                    [-0.2, 0.0, -0.1, 0.0],
                    [0.3, 0.0, 0.3, 0.0]])
t = bags[0].label
scores = [score(store.get("a", j), t) for j in range(5)]
print("\nsampling scores:", np.round(scores, 3))

rng = np.random.default_rng(0)
first = np.bincount([sample_instances(5, scores, 1, 1e-6, rng)[0] for _ in range(20000)],
                    minlength=5) / 20000
print("first-draw frequencies:", np.round(first, 3))
print("expected             :", np.round((np.array(scores) + 1e-6) / (np.sum(scores) + 5e-6), 3))
print("one draw of 3:", sample_instances(5, scores, 3, 1e-6, rng))

print("\npseudo-labels:")
for j in range(5):
    pl = dispatch(store.get("a", j), t)
    note = "  (fallback to bag label)" if pl.degenerate else ""
    print(f"  instance {j}: {np.round(pl.xi_norm, 3)}{note}")
