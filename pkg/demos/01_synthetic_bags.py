"""Generate a synthetic multi-instance multi-label dataset and look inside it.

Each bag mixes signal instances (near a class prototype) with background
instances that carry no label. Only the bag label is visible to training;
instance truths are kept for diagnostics.
"""

import tempfile
from pathlib import Path

import numpy as np

from spmiml.synthgen import SynthConfig, generate, manifest, read_bags, write_bags

cfg = SynthConfig(K=8, bags=200, max_labels=3, noise_fraction=0.3, seed=0)
bags = generate(cfg)

sizes = [len(b) for b in bags]
label_counts = np.bincount([int(b.label.sum()) for b in bags], minlength=cfg.max_labels + 1)
print(f"{len(bags)} bags, {sum(sizes)} instances, bag sizes {min(sizes)}..{max(sizes)}")
print("bags with 1/2/3 labels:", label_counts[1:].tolist())

bag = bags[0]
print(f"\n{bag.id}: label {np.flatnonzero(bag.label).tolist()}")
for inst in bag.instances[:6]:
    truth = np.flatnonzero(inst.truth).tolist() or "background"
    print(f"  instance {inst.index:2d}  truth {truth}  first features {np.round(inst.features[:4], 2)}")

meta = manifest(cfg, bags)
print(f"\nnoise instances {meta['noise_instances']} / {meta['instances']}, "
      f"max co-occurrence {meta['max_cooccurrence']}")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "demo.bags"
    write_bags(bags, path)
    print("\nfile head:")
    print("\n".join(path.read_text().splitlines()[:4]))
    assert read_bags(path) == bags
    print("round trip ok")
