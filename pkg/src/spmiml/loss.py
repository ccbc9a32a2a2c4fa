"""Image-level BCE and the confidence-gated self-paced instance loss, with gradients.

All functions expect probabilities that were already clamped away from 0 and 1.
"""

import numpy as np

from .core import DETACHED, FULL, ConfigError, ShapeError


def _same_shape(*arrays):
    arrays = [np.asarray(a, dtype=np.float64) for a in arrays]
    if len({a.shape for a in arrays}) != 1:
        raise ShapeError(f"shape mismatch: {[a.shape for a in arrays]}")
    return arrays


def bce_image(t, yhat) -> float:
    t, yhat = _same_shape(t, yhat)
    return float(-np.sum(t * np.log(yhat) + (1 - t) * np.log1p(-yhat)))


def selfpaced_loss(alpha, xi_norm, yhat):
    """-sum_k [alpha_k xi_k log y_k + (1 - xi_k) log(1 - y_k)].

    Works per instance (1-D inputs) or row-wise on (n, K) arrays.
    """
    alpha, xi, yhat = _same_shape(alpha, xi_norm, yhat)
    out = -np.sum(alpha * xi * np.log(yhat) + (1 - xi) * np.log1p(-yhat), axis=-1)
    return float(out) if out.ndim == 0 else out


def selfpaced_grads(alpha, xi_norm, yhat, mode=DETACHED, dispatch_jac=None):
    """Return (dL/dyhat, dL/dalpha).

    In ``full`` mode the pseudo-label is a function of alpha and ``dispatch_jac``
    (d xi_norm / d alpha, shape (K, K) or (n, K, K)) adds the chain term.
    """
    alpha, xi, yhat = _same_shape(alpha, xi_norm, yhat)
    log_y = np.log(yhat)
    d_yhat = -alpha * xi / yhat + (1 - xi) / (1 - yhat)
    d_alpha = -xi * log_y
    if mode == FULL:
        if dispatch_jac is None:
            raise ConfigError("full dispatcher gradient requires the dispatch Jacobian")
        d_xi = -alpha * log_y + np.log1p(-yhat)
        d_alpha = d_alpha + np.einsum("...k,...km->...m", d_xi, np.asarray(dispatch_jac))
    elif mode != DETACHED:
        raise ConfigError(f"unknown dispatcher gradient mode {mode!r}")
    return d_yhat, d_alpha
