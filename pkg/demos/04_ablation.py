"""Small ablation: switch components off one at a time, then sweep C.

A reduced version of what ``spmiml ablate`` does, using two seeds so it
finishes in well under a minute.
"""

import numpy as np

from spmiml.core import TrainConfig
from spmiml.engine import evaluate, train
from spmiml.synthgen import SynthConfig, generate

SEEDS = [0, 1]
splits = {}
for s in SEEDS:
    bags = generate(SynthConfig(K=8, bags=700, max_labels=3, noise_fraction=0.3, seed=s))
    splits[s] = (bags[:500], bags[500:])


def run(**kw):
    reports = [evaluate(te, train(tr, TrainConfig(seed=s, **kw))) for s, (tr, te) in splits.items()]
    f1 = np.array([r.f1_macro for r in reports])
    overall = np.array([r.overall for r in reports])
    return f1, overall


configs = {
    "baseline": dict(init_mode="none", use_sampler=False, use_dispatcher=False,
                     use_coefficients=False),
    "no sampler": dict(use_sampler=False),
    "no dispatcher": dict(use_dispatcher=False),
    "no coefficients": dict(use_coefficients=False),
    "full": dict(),
}
print(f"{'config':16s} {'macro-F1':>16s} {'overall':>16s}")
for name, kw in configs.items():
    f1, ov = run(**kw)
    print(f"{name:16s} {f1.mean():.3f} ± {f1.std():.3f}    {ov.mean():.3f} ± {ov.std():.3f}")

print("\nC sweep (true max co-occurrence is 3)")
for C in (1, 2, 3, 4, 6, 8):
    f1, _ = run(C=C)
    print(f"C={C}  macro-F1 {f1.mean():.3f}")
