"""L2-regularized multinomial logistic loss, its gradient and Hessian action.

Parameters are a ``(K, d)`` weight matrix ``W`` and a length-``K`` bias
``b``. The objective is

    J(W, b) = 0.5 * ||W||_F^2 + C * sum_i -log p(y_i | x_i)

with the biases left out of the penalty. Flat parameter vectors are laid out
as ``W.ravel()`` followed by ``b``.
"""

from __future__ import annotations

import numpy as np


class NonFiniteError(ValueError):
    def __init__(self, sample: int):
        super().__init__(f"non-finite logits for sample {sample}")
        self.sample = sample


def softmax(z: np.ndarray) -> np.ndarray:
    """Softmax along the last axis, shifted by the max for stability."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def pack(W: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.concatenate([np.ravel(W), np.ravel(b)])


def unpack(theta: np.ndarray, n_classes: int, n_features: int) -> tuple[np.ndarray, np.ndarray]:
    split = n_classes * n_features
    if theta.shape != (split + n_classes,):
        raise ValueError(f"parameter vector has shape {theta.shape}, expected ({split + n_classes},)")
    return theta[:split].reshape(n_classes, n_features), theta[split:]


def _forward(W, b, X):
    Z = X @ W.T + b
    if not np.all(np.isfinite(Z)):
        raise NonFiniteError(int(np.flatnonzero(~np.isfinite(Z).all(axis=1))[0]))
    m = Z.max(axis=1, keepdims=True)
    E = np.exp(Z - m)
    s = E.sum(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(s[:, 0])
    return Z, E / s, lse


def _loss_grad(W, b, X, y, C):
    Z, P, lse = _forward(W, b, X)
    rows = np.arange(X.shape[0])
    J = 0.5 * np.sum(W * W) + C * np.sum(lse - Z[rows, y])
    R = P.copy()
    R[rows, y] -= 1.0
    gW = W + C * (R.T @ X)
    gb = C * R.sum(axis=0)
    return J, gW, gb, P


def objective_and_gradient(W, b, X, y, C: float) -> tuple[float, tuple[np.ndarray, np.ndarray]]:
    """Return ``J`` and ``(dJ/dW, dJ/db)``.

    ``y`` holds integer class indices into the rows of ``W``.
    """
    W, b, X = np.asarray(W, float), np.asarray(b, float), np.asarray(X, float)
    y = np.asarray(y, dtype=np.intp)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("X must be a non-empty (n, d) matrix")
    J, gW, gb, _ = _loss_grad(W, b, X, y, C)
    return float(J), (gW, gb)


def _hvp(P, X, C, VW, vb):
    S = X @ VW.T + vb
    PS = P * S
    A = PS - P * PS.sum(axis=1, keepdims=True)
    return VW + C * (A.T @ X), C * A.sum(axis=0)


def hessian_vector_product(W, b, X, y, C: float, v: np.ndarray) -> np.ndarray:
    """Hessian of ``J`` at ``(W, b)`` applied to the flat vector ``v``.

    The Hessian does not depend on ``y``; it is accepted for symmetry with
    :func:`objective_and_gradient`.
    """
    W, b, X = np.asarray(W, float), np.asarray(b, float), np.asarray(X, float)
    K, d = W.shape
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (K * d + K,):
        raise ValueError(f"v has shape {v.shape}, expected ({K * d + K},)")
    _, P, _ = _forward(W, b, X)
    VW, vb = unpack(v, K, d)
    HW, hb = _hvp(P, X, C, VW, vb)
    return pack(HW, hb)
