"""Confidence-weight initialization and confidence-weighted instance sampling."""

from __future__ import annotations

import zlib

import numpy as np

from .core import (EmptyInputError, ConfigError, ShapeError, WeightStore, INSTANCE_LEVEL,
                   LABEL_LEVEL, GLOBAL_FREQ, PER_SAMPLE_FREQ, NO_WEIGHTS)


def softmax(x):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(x - x.max())
    return e / e.sum()


def init_global_freq(bags) -> np.ndarray:
    """Softmax over classes of each class's share of all positive labels in the dataset."""
    if not bags:
        raise EmptyInputError("cannot initialize weights from an empty dataset")
    counts = np.sum([b.label for b in bags], axis=0).astype(np.float64)
    total = counts.sum()
    if total == 0:
        raise EmptyInputError("dataset has no positive labels")
    return softmax(counts / total)


def init_per_sample_freq(bags) -> dict[str, np.ndarray]:
    """Per-bag softmax of the bag's own label frequencies.

    Every patch of a bag carries the bag label, so the patch-set frequencies
    reduce to t / |t|.
    """
    out = {}
    for b in bags:
        n_pos = b.label.sum()
        if n_pos == 0:
            raise EmptyInputError(f"bag {b.id!r} has an empty label")
        counts = len(b) * b.label.astype(np.float64)
        out[b.id] = softmax(counts / counts.sum())
    return out


def label_pattern_groups(bags) -> dict[bytes, int]:
    """Instance counts per distinct bag-label pattern."""
    groups: dict[bytes, int] = {}
    for b in bags:
        key = b.label.astype(np.int8).tobytes()
        groups[key] = groups.get(key, 0) + len(b)
    return groups


def init_instance_level(bags) -> dict[str, float]:
    """Scalar weight per instance: softmax across label-pattern groups of N_Lq / N,
    read off at the instance's own group."""
    if not bags:
        raise EmptyInputError("cannot initialize weights from an empty dataset")
    groups = label_pattern_groups(bags)
    keys = list(groups)
    n_total = sum(groups.values())
    probs = softmax(np.array([groups[k] for k in keys], dtype=np.float64) / n_total)
    by_key = dict(zip(keys, probs))
    return {b.id: float(by_key[b.label.astype(np.int8).tobytes()]) for b in bags}


def build_store(bags, granularity=LABEL_LEVEL, init_mode=PER_SAMPLE_FREQ,
                lower_clip=-1.0) -> WeightStore:
    if not bags:
        raise EmptyInputError("cannot build a weight store for an empty dataset")
    K = bags[0].K
    store = WeightStore(K, granularity, init_mode, lower_clip)
    if init_mode == NO_WEIGHTS:
        for b in bags:
            shape = (len(b), K) if granularity == LABEL_LEVEL else (len(b),)
            store.set_bag(b.id, np.ones(shape))
    elif granularity == INSTANCE_LEVEL:
        if init_mode != GLOBAL_FREQ:
            raise ConfigError("instance-level weights only support global frequency initialization")
        for bag_id, w in init_instance_level(bags).items():
            n = len(next(b for b in bags if b.id == bag_id))
            store.set_bag(bag_id, np.full(n, w))
    elif init_mode == GLOBAL_FREQ:
        w = init_global_freq(bags)
        for b in bags:
            store.set_bag(b.id, np.tile(w, (len(b), 1)))
    elif init_mode == PER_SAMPLE_FREQ:
        per_bag = init_per_sample_freq(bags)
        for b in bags:
            store.set_bag(b.id, np.tile(per_bag[b.id], (len(b), 1)))
    else:
        raise ConfigError(f"unknown init mode {init_mode!r}")
    return store


def score(alpha, t) -> float:
    """Largest rectified weight among the labeled classes."""
    alpha = np.asarray(alpha, dtype=np.float64)
    t = np.asarray(t)
    if alpha.shape != t.shape:
        raise ShapeError(f"weights {alpha.shape} and label {t.shape} differ in shape")
    return float(np.max(np.maximum(alpha, 0.0) * t, initial=0.0))


def bag_scores(alphas, t) -> np.ndarray:
    """``score`` for every row of an (N, K) weight array."""
    return np.max(np.maximum(alphas, 0.0) * np.asarray(t), axis=1, initial=0.0)


def sample_instances(n_instances, scores, M, epsilon, rng) -> list[int]:
    """Draw min(M, N) distinct indices, each draw proportional to score + epsilon
    among the instances not yet drawn.

    Falls back to uniform when every weight is zero. ``n_instances`` may be a
    bag or a count.
    """
    n = n_instances if isinstance(n_instances, int) else len(n_instances)
    if n == 0:
        raise EmptyInputError("cannot sample from an empty bag")
    if M < 1:
        raise ConfigError(f"sample count must be >= 1, got {M}")
    if len(scores) != n:
        raise ShapeError(f"{len(scores)} scores for {n} instances")
    weights = [float(s) + epsilon for s in scores]
    if sum(weights) <= 0:
        weights = [1.0] * n
    remaining = list(range(n))
    picked = []
    for _ in range(min(M, n)):
        total = sum(weights)
        if total <= 0:
            weights = [1.0] * len(weights)
            total = float(len(weights))
        r = rng.random() * total
        acc = 0.0
        # rounding can leave r just past the last cumulative sum
        pos = max(i for i, w in enumerate(weights) if w > 0)
        for i, w in enumerate(weights):
            acc += w
            if r < acc:
                pos = i
                break
        picked.append(remaining.pop(pos))
        weights.pop(pos)
    return picked


def bag_rng(seed: int, epoch: int, bag_id: str) -> np.random.Generator:
    """Independent stream per (seed, epoch, bag) so bags can be sampled in any order."""
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, epoch, zlib.crc32(bag_id.encode())])
