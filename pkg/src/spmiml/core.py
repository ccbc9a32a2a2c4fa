"""Shared domain types: bags, instances, training config and the confidence-weight store."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

LABEL_LEVEL = "label_level"
INSTANCE_LEVEL = "instance_level"
GRANULARITIES = (LABEL_LEVEL, INSTANCE_LEVEL)

GLOBAL_FREQ = "global_freq"
PER_SAMPLE_FREQ = "per_sample_freq"
NO_WEIGHTS = "none"
INIT_MODES = (GLOBAL_FREQ, PER_SAMPLE_FREQ, NO_WEIGHTS)

DETACHED = "detached"
FULL = "full"


class MIMLError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(MIMLError, ValueError):
    pass


class ShapeError(MIMLError, ValueError):
    pass


class NumericError(MIMLError, ArithmeticError):
    pass


class EmptyInputError(MIMLError, ValueError):
    """An operation received nothing to work on (empty bag, dataset, label...)."""


class ParseError(MIMLError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def label_vector(indices: Sequence[int], K: int) -> np.ndarray:
    """Multi-hot vector of length K with ones at ``indices``."""
    t = np.zeros(K, dtype=np.int8)
    for k in indices:
        if not 0 <= k < K:
            raise ShapeError(f"class index {k} out of range for K={K}")
        t[k] = 1
    return t


def label_indices(t) -> list[int]:
    return [int(k) for k in np.flatnonzero(np.asarray(t))]


@dataclass
class Instance:
    index: int
    features: np.ndarray
    # Ground truth is only known for synthetic data and is never read by training.
    truth: Optional[np.ndarray] = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if not np.all(np.isfinite(self.features)):
            raise NumericError(f"instance {self.index}: non-finite features")


@dataclass
class Bag:
    id: str
    instances: list[Instance]
    label: np.ndarray

    def __post_init__(self):
        if not self.instances:
            raise EmptyInputError(f"bag {self.id!r} has no instances")
        self.label = np.asarray(self.label, dtype=np.int8)
        dims = {inst.features.shape for inst in self.instances}
        if len(dims) != 1:
            raise ShapeError(f"bag {self.id!r}: instances differ in feature dimension")
        seen = set()
        for inst in self.instances:
            if inst.index in seen:
                raise ShapeError(f"bag {self.id!r}: duplicate instance index {inst.index}")
            seen.add(inst.index)

    def __len__(self):
        return len(self.instances)

    @property
    def K(self) -> int:
        return len(self.label)

    def feature_matrix(self) -> np.ndarray:
        return np.stack([inst.features for inst in self.instances])

    def __eq__(self, other):
        if not isinstance(other, Bag):
            return NotImplemented
        if self.id != other.id or len(self) != len(other):
            return False
        if not np.array_equal(self.label, other.label):
            return False
        for a, b in zip(self.instances, other.instances):
            if a.index != b.index or not np.array_equal(a.features, b.features):
                return False
            if (a.truth is None) != (b.truth is None):
                return False
            if a.truth is not None and not np.array_equal(a.truth, b.truth):
                return False
        return True


class WeightStore:
    """Persistent confidence weights, one entry per (bag, instance).

    ``label_level`` keeps a length-K vector per instance, ``instance_level`` a
    single scalar that reads back broadcast to length K. Values are clipped
    from below at ``lower_clip`` on every update.
    """

    def __init__(self, K: int, granularity: str = LABEL_LEVEL, init_mode: str = PER_SAMPLE_FREQ,
                 lower_clip: float = -1.0):
        if granularity not in GRANULARITIES:
            raise ConfigError(f"unknown granularity {granularity!r}")
        self.K = K
        self.granularity = granularity
        self.init_mode = init_mode
        self.lower_clip = float(lower_clip)
        self._values: dict[str, np.ndarray] = {}

    def set_bag(self, bag_id: str, values) -> None:
        values = np.array(values, dtype=np.float64)
        expected_ndim = 2 if self.granularity == LABEL_LEVEL else 1
        if values.ndim != expected_ndim or (expected_ndim == 2 and values.shape[1] != self.K):
            raise ShapeError(f"bag {bag_id!r}: weights of shape {values.shape} do not fit "
                             f"{self.granularity} store with K={self.K}")
        self._values[bag_id] = np.maximum(values, self.lower_clip)

    def _entry(self, bag_id, j):
        try:
            arr = self._values[bag_id]
        except KeyError:
            raise KeyError(f"no weights for bag {bag_id!r}") from None
        if not 0 <= j < arr.shape[0]:
            raise KeyError(f"no weights for instance {j} of bag {bag_id!r}")
        return arr

    def get(self, bag_id: str, j: int) -> np.ndarray:
        arr = self._entry(bag_id, j)
        if self.granularity == LABEL_LEVEL:
            return arr[j].copy()
        return np.full(self.K, arr[j])

    def bag_weights(self, bag_id: str) -> np.ndarray:
        """All weights of one bag as an (N, K) array (copy)."""
        arr = self._values[bag_id]
        if self.granularity == LABEL_LEVEL:
            return arr.copy()
        return np.repeat(arr[:, None], self.K, axis=1)

    def update(self, bag_id: str, j: int, gradient, eta: float) -> None:
        arr = self._entry(bag_id, j)
        if not eta > 0:
            raise ConfigError(f"weight learning rate must be positive, got {eta}")
        gradient = np.asarray(gradient, dtype=np.float64)
        if gradient.shape != (self.K,):
            raise ShapeError(f"gradient of shape {gradient.shape}, expected ({self.K},)")
        if not np.all(np.isfinite(gradient)):
            raise NumericError(f"non-finite weight gradient for bag {bag_id!r} instance {j}")
        if self.granularity == LABEL_LEVEL:
            arr[j] = np.maximum(self.lower_clip, arr[j] - eta * gradient)
        else:
            arr[j] = max(self.lower_clip, arr[j] - eta * gradient.mean())

    def __contains__(self, bag_id):
        return bag_id in self._values

    def bag_ids(self):
        return list(self._values)

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "granularity": self.granularity,
            "init_mode": self.init_mode,
            "lower_clip": self.lower_clip,
            "values": {b: v.tolist() for b, v in self._values.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WeightStore":
        store = cls(d["K"], d["granularity"], d["init_mode"], d["lower_clip"])
        for b, v in d["values"].items():
            store._values[b] = np.array(v, dtype=np.float64)
        return store


@dataclass
class TrainConfig:
    tau: float = 0.5
    C: int = 3
    lr_theta: float = 5e-3
    lr_alpha_base: float = 0.012
    batch_size: int = 32
    epochs: int = 10
    # None means min(N_i, 8) per bag; "all" means every instance.
    sample_count: Optional[int | str] = None
    granularity: str = LABEL_LEVEL
    init_mode: str = PER_SAMPLE_FREQ
    use_sampler: bool = True
    use_dispatcher: bool = True
    use_coefficients: bool = True
    dispatcher_gradient: str = DETACHED
    seed: int = 0
    prob_clamp: float = 1e-7
    sampling_epsilon: float = 1e-6
    lower_clip: float = 0.0
    lambda_formula: str = "linear"
    hidden: tuple[int, ...] = field(default=(32, 32))

    def validate(self, K: Optional[int] = None) -> "TrainConfig":
        if not 0 < self.tau < 1:
            raise ConfigError(f"tau must lie in (0, 1), got {self.tau}")
        if self.C < 1 or (K is not None and self.C > K):
            raise ConfigError(f"C must satisfy 1 <= C <= K, got C={self.C}, K={K}")
        if self.lr_theta <= 0 or self.lr_alpha_base <= 0:
            raise ConfigError("learning rates must be positive")
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigError("batch_size must be >= 1 and epochs >= 0")
        if not 0 < self.prob_clamp < 0.5:
            raise ConfigError(f"prob_clamp must lie in (0, 0.5), got {self.prob_clamp}")
        if self.sampling_epsilon < 0:
            raise ConfigError("sampling_epsilon must be >= 0")
        if self.sample_count is not None and self.sample_count != "all":
            if int(self.sample_count) < 1:
                raise ConfigError("sample_count must be a positive integer or 'all'")
        if self.granularity not in GRANULARITIES:
            raise ConfigError(f"unknown granularity {self.granularity!r}")
        if self.init_mode not in INIT_MODES:
            raise ConfigError(f"unknown init mode {self.init_mode!r}")
        if self.dispatcher_gradient not in (DETACHED, FULL):
            raise ConfigError(f"unknown dispatcher gradient mode {self.dispatcher_gradient!r}")
        if self.granularity == INSTANCE_LEVEL:
            # A scalar per instance cannot redistribute a bag label over classes.
            if self.use_dispatcher and self.init_mode != NO_WEIGHTS:
                raise ConfigError("instance-level weights are not able to implement the probabilistic "
                                  "pseudo-label dispatcher: a single scalar per instance carries "
                                  "no per-class preference to redistribute the bag label")
            if self.init_mode == PER_SAMPLE_FREQ:
                raise ConfigError("instance-level weights cannot use per-sample frequency "
                                  "initialization: all instances of a sample would share one scalar")
        return self

    @property
    def uses_weights(self) -> bool:
        return self.init_mode != NO_WEIGHTS

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "hidden" in d:
            d["hidden"] = tuple(d["hidden"])
        return cls(**d)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()
