"""Synthetic MIML bags with known instance truth, and the ``#MIMLBAGS v1`` file format.

Class k has a Gaussian prototype at ``class_separation * e_k``; an instance
carrying classes S is drawn around the sum of the prototypes in S with unit
covariance. Noise instances come from the standard normal background and
carry no class.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .core import Bag, ConfigError, Instance, ParseError, label_indices, label_vector

HEADER = "#MIMLBAGS v1"

# chance that a signal instance carries each further bag label besides its primary one
EXTRA_LABEL_PROB = 0.25


@dataclass
class SynthConfig:
    K: int = 8
    D: int = 16
    bags: int = 500
    instances_per_bag: tuple[int, int] = (8, 24)
    max_labels: int = 3
    noise_fraction: float = 0.3
    class_separation: float = 2.0
    seed: int = 0

    def validate(self):
        lo, hi = self.instances_per_bag
        if self.K < 1 or self.bags < 0:
            raise ConfigError("K must be >= 1 and bags >= 0")
        if self.D < self.K:
            raise ConfigError(f"feature dim D={self.D} cannot hold {self.K} orthogonal prototypes")
        if not 1 <= self.max_labels <= self.K:
            raise ConfigError(f"max_labels must lie in [1, K], got {self.max_labels}")
        if not 0 <= self.noise_fraction < 1:
            raise ConfigError(f"noise_fraction must lie in [0, 1), got {self.noise_fraction}")
        if self.class_separation < 0:
            raise ConfigError("class_separation must be >= 0")
        if not 1 <= lo <= hi:
            raise ConfigError(f"bad instances_per_bag range {self.instances_per_bag}")
        if lo < self.max_labels:
            raise ConfigError(f"bags of {lo} instances cannot show up to {self.max_labels} labels")
        return self


def _round9(x):
    # keep exactly what the file format can represent so round trips are exact
    return np.array([float(f"{v:.9g}") for v in x])


def prototypes(cfg: SynthConfig) -> np.ndarray:
    P = np.zeros((cfg.K, cfg.D))
    P[np.arange(cfg.K), np.arange(cfg.K)] = cfg.class_separation
    return P


def generate(cfg: SynthConfig) -> list[Bag]:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    P = prototypes(cfg)
    lo, hi = cfg.instances_per_bag
    bags = []
    for b in range(cfg.bags):
        n_labels = int(rng.integers(1, cfg.max_labels + 1))
        labels = np.sort(rng.choice(cfg.K, size=n_labels, replace=False))
        n = int(rng.integers(lo, hi + 1))
        noise = rng.random(n) < cfg.noise_fraction
        short = n_labels - int(np.sum(~noise))
        if short > 0:
            noise[rng.choice(np.flatnonzero(noise), size=short, replace=False)] = False
        signal = np.flatnonzero(~noise)
        # every bag label is the primary class of at least one signal instance
        primary = np.concatenate([rng.permutation(labels),
                                  rng.choice(labels, size=len(signal) - n_labels)])
        primary = primary[rng.permutation(len(signal))]
        instances = []
        s = 0
        for j in range(n):
            if noise[j]:
                truth = np.zeros(cfg.K, dtype=np.int8)
            else:
                extra = labels[rng.random(n_labels) < EXTRA_LABEL_PROB]
                truth = label_vector(np.union1d(extra, [primary[s]]), cfg.K)
                s += 1
            x = truth @ P + rng.standard_normal(cfg.D)
            instances.append(Instance(j, _round9(x), truth))
        bags.append(Bag(f"bag{b:05d}", instances, label_vector(labels, cfg.K)))
    return bags


def manifest(cfg: SynthConfig, bags) -> dict:
    """Sidecar metadata: config echo, seed and observed statistics."""
    n_inst = sum(len(b) for b in bags)
    n_noise = sum(int(not inst.truth.any()) for b in bags for inst in b.instances
                  if inst.truth is not None)
    return {
        "config": asdict(cfg),
        "seed": cfg.seed,
        "bags": len(bags),
        "instances": n_inst,
        "noise_instances": n_noise,
        "max_cooccurrence": max((int(b.label.sum()) for b in bags), default=0),
    }


def _fmt_indices(idx):
    return ",".join(str(k) for k in idx) if len(idx) else "-"


def _parse_indices(text, K, lineno):
    if text == "-":
        return np.zeros(K, dtype=np.int8)
    try:
        idx = [int(v) for v in text.split(",")]
        return label_vector(idx, K)
    except ValueError as e:
        raise ParseError(f"bad class index list {text!r}: {e}", lineno) from None


def write_bags(bags, path, K: int | None = None, D: int | None = None) -> None:
    bags = list(bags)
    if bags:
        K = bags[0].K if K is None else K
        D = len(bags[0].instances[0].features) if D is None else D
    lines = [HEADER, f"K={K or 0} D={D or 0}"]
    for bag in bags:
        lines.append(f"bag {bag.id} labels={_fmt_indices(label_indices(bag.label))} n={len(bag)}")
        for inst in bag.instances:
            row = "inst " + " ".join(f"{v:.9g}" for v in inst.features)
            if inst.truth is not None:
                row += " truth=" + _fmt_indices(label_indices(inst.truth))
            lines.append(row)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _kv(token, key, lineno):
    if not token.startswith(key + "="):
        raise ParseError(f"expected {key}=..., got {token!r}", lineno)
    return token[len(key) + 1:]


def read_bags(path) -> list[Bag]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise ParseError(f"missing {HEADER!r} header", 1)
    if len(lines) < 2:
        raise ParseError("missing K=/D= line", 2)
    parts = lines[1].split()
    try:
        if len(parts) != 2:
            raise ValueError
        K = int(_kv(parts[0], "K", 2))
        D = int(_kv(parts[1], "D", 2))
    except ValueError:
        raise ParseError(f"bad dimension line {lines[1]!r}", 2) from None

    bags = []
    i = 2
    while i < len(lines):
        lineno = i + 1
        parts = lines[i].split()
        i += 1
        if not parts:
            continue
        if parts[0] != "bag" or len(parts) != 4:
            raise ParseError(f"expected 'bag <id> labels=.. n=..', got {lines[i - 1]!r}", lineno)
        bag_id = parts[1]
        label = _parse_indices(_kv(parts[2], "labels", lineno), K, lineno)
        try:
            n = int(_kv(parts[3], "n", lineno))
        except ValueError:
            raise ParseError(f"bad instance count {parts[3]!r}", lineno) from None
        instances = []
        for j in range(n):
            if i >= len(lines):
                raise ParseError(f"bag {bag_id!r} ends after {j} of {n} instances", i)
            lineno = i + 1
            toks = lines[i].split()
            i += 1
            if not toks or toks[0] != "inst":
                raise ParseError(f"expected 'inst' line, got {lines[i - 1]!r}", lineno)
            truth = None
            if toks[-1].startswith("truth="):
                truth = _parse_indices(toks[-1][len("truth="):], K, lineno)
                toks = toks[:-1]
            if len(toks) - 1 != D:
                raise ParseError(f"expected {D} features, got {len(toks) - 1}", lineno)
            try:
                feats = np.array([float(v) for v in toks[1:]])
            except ValueError:
                raise ParseError("non-numeric feature value", lineno) from None
            instances.append(Instance(j, feats, truth))
        bags.append(Bag(bag_id, instances, label))
    return bags


def write_manifest(cfg: SynthConfig, bags, path) -> None:
    Path(path).write_text(json.dumps(manifest(cfg, bags), indent=2, sort_keys=True) + "\n")
