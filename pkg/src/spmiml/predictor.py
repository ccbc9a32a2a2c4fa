"""Instance predictor interface, a reference MLP with hand-written backward pass, and Adam."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import NumericError, ShapeError


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class MLP:
    """Rectifier hidden layers, logistic outputs, parameters kept in one flat vector.

    ``predict`` and ``backward`` accept a single feature vector or an (n, D)
    batch; ``backward`` sums the parameter gradient over the batch.
    """

    def __init__(self, sizes, prob_clamp=1e-7):
        self.sizes = [int(s) for s in sizes]
        if len(self.sizes) < 2:
            raise ShapeError("an MLP needs at least input and output sizes")
        self.prob_clamp = prob_clamp
        self._slices = []
        offset = 0
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            w = slice(offset, offset + fan_in * fan_out)
            offset += fan_in * fan_out
            b = slice(offset, offset + fan_out)
            offset += fan_out
            self._slices.append((w, b, fan_in, fan_out))
        self.n_params = offset

    @property
    def n_inputs(self):
        return self.sizes[0]

    @property
    def n_outputs(self):
        return self.sizes[-1]

    def init_params(self, rng) -> np.ndarray:
        theta = np.zeros(self.n_params)
        for w, _, fan_in, _ in self._slices:
            bound = np.sqrt(6.0 / fan_in)
            theta[w] = rng.uniform(-bound, bound, size=w.stop - w.start)
        return theta

    def _layers(self, theta):
        if theta.shape != (self.n_params,):
            raise ShapeError(f"expected {self.n_params} parameters, got {theta.shape}")
        for w, b, fan_in, fan_out in self._slices:
            yield theta[w].reshape(fan_in, fan_out), theta[b]

    def _forward(self, theta, X):
        acts = [X]
        layers = list(self._layers(theta))
        h = X
        for i, (W, b) in enumerate(layers):
            z = h @ W + b
            h = np.maximum(z, 0.0) if i < len(layers) - 1 else z
            acts.append(h)
        return acts, layers

    def _batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n_inputs:
            raise ShapeError(f"expected {self.n_inputs} features, got {X.shape[1]}")
        return X, single

    def predict(self, theta, X) -> np.ndarray:
        X, single = self._batch(X)
        acts, _ = self._forward(theta, X)
        p = np.clip(sigmoid(acts[-1]), self.prob_clamp, 1.0 - self.prob_clamp)
        return p[0] if single else p

    def backward(self, theta, X, upstream) -> np.ndarray:
        """Gradient over theta of sum(upstream * predict(theta, X))."""
        X, single = self._batch(X)
        upstream = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
        if upstream.shape != (X.shape[0], self.n_outputs):
            raise ShapeError(f"upstream of shape {upstream.shape} does not match outputs")
        acts, layers = self._forward(theta, X)
        p = sigmoid(acts[-1])
        inside = (p > self.prob_clamp) & (p < 1.0 - self.prob_clamp)
        delta = upstream * p * (1.0 - p) * inside
        grad = np.zeros(self.n_params)
        for i in range(len(layers) - 1, -1, -1):
            w, b, _, _ = self._slices[i]
            W, _ = layers[i]
            grad[w] = (acts[i].T @ delta).ravel()
            grad[b] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ W.T) * (acts[i] > 0)
        return grad


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n))

    def to_dict(self):
        return {"m": self.m.tolist(), "v": self.v.tolist(), "step": self.step,
                "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["m"], dtype=np.float64), np.array(d["v"], dtype=np.float64),
                   d["step"], d["beta1"], d["beta2"], d["eps"])


def adam_step(state: AdamState, theta, gradient, lr):
    """Bias-corrected Adam update; returns (new theta, new state)."""
    gradient = np.asarray(gradient, dtype=np.float64)
    if gradient.shape != theta.shape or state.m.shape != theta.shape:
        raise ShapeError("parameter, gradient and moment shapes must agree")
    if not np.all(np.isfinite(gradient)):
        raise NumericError("non-finite parameter gradient")
    step = state.step + 1
    m = state.beta1 * state.m + (1 - state.beta1) * gradient
    v = state.beta2 * state.v + (1 - state.beta2) * gradient**2
    m_hat = m / (1 - state.beta1**step)
    v_hat = v / (1 - state.beta2**step)
    theta = theta - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return theta, AdamState(m, v, step, state.beta1, state.beta2, state.eps)
