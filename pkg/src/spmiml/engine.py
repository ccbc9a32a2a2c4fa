"""Training loop: sample -> predict -> dispatch -> loss -> update parameters and weights."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (ConfigError, EmptyInputError, NumericError, ShapeError, TrainConfig,
                   WeightStore)
from .dispatcher import dispatch, dispatch_jacobian
from .loss import selfpaced_grads, selfpaced_loss
from .metrics import MetricsReport, compute_all
from .predictor import MLP, AdamState, adam_step
from .sampler import bag_rng, bag_scores, build_store, sample_instances
from .core import FULL

CHECKPOINT_FORMAT = "spmiml-checkpoint"
CHECKPOINT_VERSION = 1
DEFAULT_SAMPLE_CAP = 8


def _linear(n_pos, C, K):
    return n_pos * C / K


def _sqrt(n_pos, C, K):
    return np.sqrt(n_pos) * C / K


# Both grow with C and with the number of positive labels.
LAMBDA_FORMULAS = {"linear": _linear, "sqrt": _sqrt}


def label_aware_lambda(t, C: int, K: int, formula: str = "linear") -> float:
    """Per-bag multiplier on the weight learning rate, |t| * C / K by default."""
    if not 1 <= C <= K:
        raise ConfigError(f"C must satisfy 1 <= C <= K, got C={C}, K={K}")
    if formula not in LAMBDA_FORMULAS:
        raise ConfigError(f"unknown lambda formula {formula!r}; choose from {sorted(LAMBDA_FORMULAS)}")
    n_pos = int(np.sum(t))
    if n_pos < 1:
        raise EmptyInputError("label-aware coefficient needs a non-empty label")
    return float(LAMBDA_FORMULAS[formula](n_pos, C, K))


def aggregate(instance_preds, tau: float):
    """Class-wise max over instances, then strict thresholding at tau."""
    preds = np.atleast_2d(np.asarray(instance_preds, dtype=np.float64))
    if preds.size == 0:
        raise EmptyInputError("cannot aggregate an empty set of instance predictions")
    scores = preds.max(axis=0)
    return scores, (scores > tau).astype(np.int8)


@dataclass
class TrainState:
    config: TrainConfig
    model: MLP
    theta: np.ndarray
    adam: AdamState
    store: WeightStore
    epoch: int = 0
    losses: list = field(default_factory=list)


def _sample_count(cfg: TrainConfig, n: int) -> int:
    if cfg.sample_count == "all":
        return n
    if cfg.sample_count is None:
        return min(n, DEFAULT_SAMPLE_CAP)
    return min(n, int(cfg.sample_count))


def init_state(bags, cfg: TrainConfig) -> TrainState:
    if not bags:
        raise EmptyInputError("cannot train on an empty dataset")
    K = bags[0].K
    D = len(bags[0].instances[0].features)
    cfg.validate(K)
    model = MLP([D, *cfg.hidden, K], prob_clamp=cfg.prob_clamp)
    theta = model.init_params(np.random.default_rng([cfg.seed & 0xFFFFFFFFFFFFFFFF, 0x1417]))
    store = build_store(bags, cfg.granularity, cfg.init_mode, cfg.lower_clip)
    return TrainState(cfg, model, theta, AdamState.zeros(model.n_params), store)


def _pseudo_labels(cfg, alphas, labels):
    n, K = alphas.shape
    if not cfg.use_dispatcher:
        return labels.astype(np.float64), None
    xi = np.empty((n, K))
    jac = np.zeros((n, K, K)) if cfg.dispatcher_gradient == FULL else None
    for r in range(n):
        xi[r] = dispatch(alphas[r], labels[r]).xi_norm
        if jac is not None:
            jac[r] = dispatch_jacobian(alphas[r], labels[r])
    return xi, jac


def train_epoch(bags, state: TrainState) -> float:
    """Run one epoch in place and return the mean per-instance loss."""
    cfg = state.config
    epoch = state.epoch + 1
    order = np.random.default_rng([cfg.seed & 0xFFFFFFFFFFFFFFFF, epoch]).permutation(len(bags))
    K = state.store.K
    # A bag's weights only change while its own instances train, so drawing
    # every bag's sample up front is the same as drawing it just in time.
    rows = []  # (bag, instance index, lambda)
    for i in order:
        bag = bags[i]
        weights = state.store.bag_weights(bag.id)
        if cfg.use_sampler and cfg.uses_weights:
            scores = bag_scores(weights, bag.label)
        else:
            scores = np.zeros(len(bag))
        idx = sample_instances(len(bag), scores, _sample_count(cfg, len(bag)),
                               cfg.sampling_epsilon, bag_rng(cfg.seed, epoch, bag.id))
        lam = label_aware_lambda(bag.label, cfg.C, K, cfg.lambda_formula) if cfg.use_coefficients else 1.0
        rows.extend((bag, j, lam) for j in idx)

    total_loss = 0.0
    for start in range(0, len(rows), cfg.batch_size):
        batch = rows[start:start + cfg.batch_size]
        X = np.stack([bag.instances[j].features for bag, j, _ in batch])
        labels = np.stack([bag.label for bag, _, _ in batch])
        alphas = np.stack([state.store.get(bag.id, j) for bag, j, _ in batch])
        yhat = state.model.predict(state.theta, X)
        xi, jac = _pseudo_labels(cfg, alphas, labels)
        losses = selfpaced_loss(alphas, xi, yhat)
        if not np.all(np.isfinite(losses)):
            r = int(np.flatnonzero(~np.isfinite(losses))[0])
            raise NumericError(f"epoch {epoch}: non-finite loss at bag {batch[r][0].id!r} "
                               f"instance {batch[r][1]}")
        d_y, d_alpha = selfpaced_grads(alphas, xi, yhat, cfg.dispatcher_gradient, jac)

        grad = state.model.backward(state.theta, X, d_y) / len(batch)
        try:
            state.theta, state.adam = adam_step(state.adam, state.theta, grad, cfg.lr_theta)
        except NumericError as e:
            raise NumericError(f"epoch {epoch}, batch at bag {batch[0][0].id!r}: {e}") from None
        if cfg.uses_weights:
            for (bag, j, lam), g in zip(batch, d_alpha):
                state.store.update(bag.id, j, g, cfg.lr_alpha_base * lam)
        total_loss += float(np.sum(losses))

    state.epoch = epoch
    mean_loss = total_loss / len(rows) if rows else 0.0
    state.losses.append(mean_loss)
    return mean_loss


def train(bags, cfg: TrainConfig, epochs: int | None = None, on_epoch=None) -> TrainState:
    state = init_state(bags, cfg)
    for _ in range(cfg.epochs if epochs is None else epochs):
        loss = train_epoch(bags, state)
        if on_epoch is not None:
            on_epoch(state.epoch, loss)
    return state


def predict_bags(bags, state: TrainState, tau: float | None = None):
    """Aggregated (scores, labels) arrays of shape (n_bags, K), using every instance."""
    tau = state.config.tau if tau is None else tau
    scores, labels = [], []
    for bag in bags:
        s, l = aggregate(state.model.predict(state.theta, bag.feature_matrix()), tau)
        scores.append(s)
        labels.append(l)
    return np.array(scores), np.array(labels)


def evaluate(bags, state: TrainState, tau: float | None = None) -> MetricsReport:
    if not bags:
        raise EmptyInputError("cannot evaluate on an empty dataset")
    scores, preds = predict_bags(bags, state, tau)
    truths = np.array([b.label for b in bags])
    return compute_all(truths, preds, scores)


def checkpoint_dict(state: TrainState) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "epoch": state.epoch,
        "config": state.config.to_dict(),
        "config_hash": state.config.config_hash(),
        "seed": state.config.seed,
        "layers": state.model.sizes,
        "theta": state.theta.tolist(),
        "adam": state.adam.to_dict(),
        "weights": state.store.to_dict(),
        "losses": state.losses,
    }


def save_checkpoint(state: TrainState, path) -> None:
    Path(path).write_text(json.dumps(checkpoint_dict(state), sort_keys=True) + "\n")


def load_checkpoint(path) -> TrainState:
    d = json.loads(Path(path).read_text())
    if d.get("format") != CHECKPOINT_FORMAT:
        raise ConfigError(f"{path}: not a checkpoint file")
    if d.get("version") != CHECKPOINT_VERSION:
        raise ConfigError(f"{path}: checkpoint version {d.get('version')} is not supported "
                          f"(expected {CHECKPOINT_VERSION})")
    cfg = TrainConfig.from_dict(d["config"])
    if cfg.config_hash() != d["config_hash"]:
        raise ConfigError(f"{path}: config hash does not match stored config")
    model = MLP(d["layers"], prob_clamp=cfg.prob_clamp)
    theta = np.array(d["theta"], dtype=np.float64)
    if theta.shape != (model.n_params,):
        raise ShapeError(f"{path}: parameter count does not match layers")
    return TrainState(cfg, model, theta, AdamState.from_dict(d["adam"]),
                      WeightStore.from_dict(d["weights"]), d["epoch"], list(d["losses"]))
