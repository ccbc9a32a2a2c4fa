"""Soft per-instance pseudo-labels from a bag label and the instance's confidence weights."""

from dataclasses import dataclass

import numpy as np

from .core import EmptyInputError, ShapeError


@dataclass
class PseudoLabel:
    xi_raw: np.ndarray
    xi_norm: np.ndarray
    degenerate: bool = False


def _check(alpha, t):
    alpha = np.asarray(alpha, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if alpha.shape != t.shape or alpha.ndim != 1:
        raise ShapeError(f"weights {alpha.shape} and label {t.shape} must be equal-length vectors")
    if not t.any():
        raise EmptyInputError("cannot dispatch an empty bag label")
    return alpha, t


def dispatch(alpha, t) -> PseudoLabel:
    """Mask rectified weights by the bag label, then max-min normalize over all classes.

    When every class ends up with the same masked weight the normalization is
    undefined and the bag label itself is returned.
    """
    alpha, t = _check(alpha, t)
    xi = np.maximum(alpha, 0.0) * t
    hi, lo = xi.max(), xi.min()
    if hi > lo:
        return PseudoLabel(xi, (xi - lo) / (hi - lo))
    return PseudoLabel(xi, t.copy(), degenerate=True)


def dispatch_jacobian(alpha, t) -> np.ndarray:
    """d xi_norm[k] / d alpha[m] as a (K, K) matrix.

    The arg-max and arg-min classes are held fixed and the rectifier has zero
    slope at alpha <= 0. The degenerate branch is piecewise constant, so its
    Jacobian is zero.
    """
    alpha, t = _check(alpha, t)
    K = len(alpha)
    xi = np.maximum(alpha, 0.0) * t
    a, b = int(np.argmax(xi)), int(np.argmin(xi))
    R = xi[a] - xi[b]
    if R <= 0:
        return np.zeros((K, K))
    # d xi_norm / d xi
    J = np.eye(K) / R
    J[:, b] -= 1.0 / R
    rel = (xi - xi[b]) / R**2
    J[:, a] -= rel
    J[:, b] += rel
    # chain through xi = relu(alpha) * t
    return J * (t * (alpha > 0))[None, :]
