"""Pure-numpy implementations of the hot solver kernels.

These are the reference implementations and the runtime fallback when the
compiled extension (``emprobe._kernels``) is not built. Both backends share
one contract:

    logistic_terms(X, s, w, b, C) -> (J, grad, hess)

for the L2-regularized logistic objective

    J(w, b) = 0.5 * ||w||^2 + C * sum_i log(1 + exp(-s_i * (x_i . w + b)))

with s in {-1, +1} and an unregularized intercept. ``grad`` has shape (d+1,)
and ``hess`` shape (d+1, d+1); the intercept occupies the last slot.
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def softplus(x: np.ndarray) -> np.ndarray:
    """log(1 + exp(x)) without overflow."""
    return np.logaddexp(0.0, x)


def logistic_value(z: np.ndarray) -> float:
    """Sum of per-sample losses given agreement margins z_i = s_i * m_i."""
    return float(np.sum(softplus(-z)))


def logistic_loss_grad(X, s, w, b, C):
    """Objective and gradient only (no Hessian).

    Returns (J, grad, dvec) where dvec = sigma(m) * (1 - sigma(m)) is handed
    back because every caller that needs the gradient also needs the Hessian
    weights next.
    """
    m = X @ w + b
    z = s * m
    J = 0.5 * float(w @ w) + C * logistic_value(z)
    # residual p - y expressed through the agreement margin
    r = -s * sigmoid(-z)
    grad = np.empty(w.shape[0] + 1)
    grad[:-1] = w + C * (X.T @ r)
    grad[-1] = C * float(r.sum())
    dvec = sigmoid(z) * sigmoid(-z)
    return J, grad, dvec


def logistic_hessian(X, dvec, C):
    """Dense Hessian over (w, b) given the per-sample weights dvec."""
    d = X.shape[1]
    Xd = X * dvec[:, None]
    hess = np.empty((d + 1, d + 1))
    hess[:d, :d] = C * (X.T @ Xd)
    hess[:d, :d].flat[:: d + 1] += 1.0
    cross = C * (Xd.sum(axis=0))
    hess[:d, d] = cross
    hess[d, :d] = cross
    hess[d, d] = C * float(dvec.sum())
    return hess


def logistic_terms(X, s, w, b, C):
    """Fused objective, gradient and dense Hessian over (w, b)."""
    J, grad, dvec = logistic_loss_grad(X, s, w, b, C)
    return J, grad, logistic_hessian(X, dvec, C)
