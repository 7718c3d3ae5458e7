"""Deterministic regularized linear models.

Two models, both with unregularized intercepts:

* binary logistic regression minimizing
  ``J(w, b) = 0.5 ||w||^2 + C * sum_i log(1 + exp(-s_i (w.x_i + b)))``
  (``s_i = 2 y_i - 1``), solved by damped Newton iterations from a zero
  start, so repeated fits on identical inputs are bit-identical;

* ridge regression minimizing ``||y - Xw - b||^2 + alpha ||w||^2``, solved
  in closed form on mean-centered data.

When the feature count exceeds the sample count, both models route the
linear algebra through the n x n Gram matrix instead of the d x d normal
equations (matrix inversion lemma), which keeps 1024-dimensional embedding
fits cheap on a few hundred utterances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from emprobe import _backend, _kernels_py
from emprobe.errors import ConvergenceError, SingularSystemError, ValidationError

# Once the relative tolerance is met, keep polishing until the gradient is
# tiny in absolute terms too (or the budget runs out); with large C the
# quadratic-convergence constant is big enough that a fixed step or two
# would leave the gradient around 1e-6.
_POLISH_TARGET = 1e-9
_POLISH_MAX = 12
_ARMIJO_C1 = 1e-4
_MIN_STEP = 2.0 ** -40


@dataclass(frozen=True)
class LogisticModel:
    """Fitted logistic regression: p(y=1|x) = sigmoid(w.x + b)."""

    weights: np.ndarray
    intercept: float
    C: float
    n_iter: int = 0
    grad_norm: float = 0.0


@dataclass(frozen=True)
class RidgeModel:
    """Fitted ridge regression: y_hat = w.x + b."""

    weights: np.ndarray
    intercept: float
    alpha: float


def _as_matrix(X, name="X") -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValidationError(f"{name} contains non-finite values")
    return np.ascontiguousarray(X)


def _as_vector(y, n, name="y") -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != n:
        raise ValidationError(f"{name} has {y.shape[0]} entries for {n} rows")
    if not np.all(np.isfinite(y)):
        raise ValidationError(f"{name} contains non-finite values")
    return y


def logistic_objective(X, y, weights, intercept, C) -> float:
    """Value of the logistic objective J at (weights, intercept)."""
    X = np.asarray(X, dtype=np.float64)
    s = 2.0 * np.asarray(y, dtype=np.float64) - 1.0
    z = s * (X @ weights + intercept)
    w = np.asarray(weights, dtype=np.float64)
    return 0.5 * float(w @ w) + C * _kernels_py.logistic_value(z)


def mean_log_loss(X, y, weights, intercept) -> float:
    """Mean per-sample log-loss of a fitted model on (X, y)."""
    X = np.asarray(X, dtype=np.float64)
    s = 2.0 * np.asarray(y, dtype=np.float64) - 1.0
    z = s * (X @ weights + intercept)
    return _kernels_py.logistic_value(z) / len(z)


def logistic_gradient(X, y, weights, intercept, C) -> np.ndarray:
    """Analytic gradient of J over (weights, intercept); intercept last."""
    X = _as_matrix(X)
    s = 2.0 * _as_vector(y, X.shape[0]) - 1.0
    _, grad, _ = _kernels_py.logistic_loss_grad(
        X, s, np.asarray(weights, dtype=np.float64), float(intercept), float(C))
    return grad


def _solve_spd(H, rhs):
    """Solve an (expected) positive-definite system, escalating damping on failure.

    Returns None when even heavy damping cannot produce a solution.
    """
    lam = 0.0
    scale = 1.0 + float(np.trace(H)) / H.shape[0]
    for _ in range(4):
        try:
            Hd = H if lam == 0.0 else H + lam * np.eye(H.shape[0])
            step = np.linalg.solve(Hd, rhs)
            if np.all(np.isfinite(step)):
                return step
        except np.linalg.LinAlgError:
            pass
        lam = 1e-10 * scale if lam == 0.0 else lam * 1e4
    return None


def fit_logistic(X, y, C: float, tol: float = 1e-8,
                 max_iter: int = 10_000) -> LogisticModel:
    """Fit L2-regularized logistic regression.

    Newton iterations with Armijo backtracking from a zero start; stops when
    the gradient norm falls below ``tol * max(1, ||grad at zero||)``, then
    keeps polishing (bounded) until the gradient is near machine level, so
    small problems land essentially at the exact optimum. Raises
    ConvergenceError if the cap of ``max_iter`` iterations is exhausted
    first.
    """
    X = _as_matrix(X)
    n, d = X.shape
    if n < 2:
        raise ValidationError(f"need at least 2 rows, got {n}")
    yv = _as_vector(y, n)
    classes = np.unique(yv)
    if not np.all(np.isin(classes, (0.0, 1.0))):
        raise ValidationError("y must be binary 0/1")
    if classes.size < 2:
        raise ValidationError("y contains a single class")
    C = float(C)
    if not (np.isfinite(C) and C > 0):
        raise ValidationError(f"C must be positive and finite, got {C}")

    s = 2.0 * yv - 1.0
    w = np.zeros(d)
    b = 0.0
    dual = d > n
    loss_grad = _backend.loss_grad_for(n, d)
    hessian = None if dual else _backend.hessian_for(n, d)
    K = X @ X.T if dual else None

    tol_eff = None
    polish = None
    gnorm = np.inf
    it = 0
    for it in range(max_iter + 1):
        J, grad, dvec = loss_grad(X, s, w, b, C)
        gnorm = float(np.linalg.norm(grad))
        if tol_eff is None:
            tol_eff = tol * max(1.0, gnorm)
        if polish is None and gnorm <= tol_eff:
            polish = _POLISH_MAX
        if polish == 0 or gnorm == 0.0 or it == max_iter:
            break
        if polish is not None:
            if gnorm <= _POLISH_TARGET:
                break
            polish -= 1

        if dual:
            step = _dual_newton_step(X, K, dvec, grad, C)
        else:
            step = _solve_spd(hessian(X, dvec, C), -grad)
        if step is None or float(grad @ step) >= 0.0:
            step = -grad  # fall back to steepest descent, always a descent direction

        gdot = float(grad @ step)
        dw, db = step[:d], step[d]
        t = 1.0
        accepted = False
        flat = abs(gdot) <= 8.0 * np.finfo(float).eps * max(1.0, abs(J))
        if not flat:
            dm = X @ dw + db
            m = X @ w + b
            while t >= _MIN_STEP:
                w_t = w + t * dw
                J_t = 0.5 * float(w_t @ w_t) + C * _kernels_py.logistic_value(s * (m + t * dm))
                # strict decrease: a tie means the step sank below float
                # resolution, which the gradient rescue handles properly
                if J_t <= J + _ARMIJO_C1 * t * gdot and J_t < J:
                    accepted = True
                    break
                t *= 0.5
        if not accepted:
            # Objective differences are at the float floor near the optimum;
            # take the full Newton step if it still shrinks the gradient
            # (it contracts quadratically there).
            _, g_full, _ = loss_grad(X, s, w + dw, b + db, C)
            if float(np.linalg.norm(g_full)) < gnorm:
                t = 1.0
                accepted = True
        if not accepted:
            break  # numerically stalled at the current point
        w = w + t * dw
        b = b + t * db

    if gnorm > tol_eff:
        raise ConvergenceError(
            f"logistic solver stopped at gradient norm {gnorm:.3e} "
            f"(tolerance {tol_eff:.3e}) after {it} iterations")
    w.flags.writeable = False
    return LogisticModel(weights=w, intercept=float(b), C=C,
                         n_iter=it, grad_norm=gnorm)


def _dual_newton_step(X, K, dvec, grad, C):
    """Newton step through the n x n Gram system (for d > n).

    With A = I + C X^T D X, the inversion lemma gives
    A^{-1} v = v - X^T (D^{-1}/C + K)^{-1} X v, and the intercept row is
    eliminated by its Schur complement.
    """
    n, d = X.shape
    dv = np.maximum(dvec, 1e-300)  # saturated samples otherwise divide by zero
    M = K + np.diag(1.0 / (C * dv))
    gw, gb = grad[:d], grad[d]
    u = C * (X.T @ dv)
    h22 = C * float(dv.sum())
    try:
        rhs = np.stack([X @ gw, X @ u], axis=1)
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        return None
    r1 = gw - X.T @ sol[:, 0]   # A^{-1} grad_w
    r2 = u - X.T @ sol[:, 1]    # A^{-1} u
    denom = h22 - float(u @ r2)
    if not np.isfinite(denom) or denom <= 0.0:
        return None
    db = -(gb - float(u @ r1)) / denom
    dw = -r1 - db * r2
    step = np.empty(d + 1)
    step[:d] = dw
    step[d] = db
    return step if np.all(np.isfinite(step)) else None


def predict_proba(model: LogisticModel, X) -> np.ndarray:
    """Per-row probability sigmoid(w.x + b), strictly inside (0, 1)."""
    X = _as_matrix(X)
    if X.shape[1] != model.weights.shape[0]:
        raise ValidationError(
            f"X has {X.shape[1]} columns, model expects {model.weights.shape[0]}")
    p = _kernels_py.sigmoid(X @ model.weights + model.intercept)
    return np.clip(p, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))


def fit_ridge(X, y, alpha: float) -> RidgeModel:
    """Fit ridge regression in closed form.

    Solves the centered normal equations (Xc^T Xc + alpha I) w = Xc^T yc
    and sets b = mean(y) - w . mean(X). With alpha = 0 a rank-deficient
    system raises SingularSystemError instead of returning garbage.
    """
    X = _as_matrix(X)
    n, d = X.shape
    if n < 2:
        raise ValidationError(f"need at least 2 rows, got {n}")
    yv = _as_vector(y, n)
    alpha = float(alpha)
    if not (np.isfinite(alpha) and alpha >= 0):
        raise ValidationError(f"alpha must be nonnegative and finite, got {alpha}")

    xbar = X.mean(axis=0)
    ybar = float(yv.mean())
    Xc = X - xbar
    yc = yv - ybar
    rhs = Xc.T @ yc
    if alpha > 0.0 and d > n:
        w = Xc.T @ np.linalg.solve(Xc @ Xc.T + alpha * np.eye(n), yc)
    else:
        G = Xc.T @ Xc
        G.flat[:: d + 1] += alpha
        try:
            w = np.linalg.solve(G, rhs)
        except np.linalg.LinAlgError:
            raise SingularSystemError(
                "normal equations are singular; Xc^T Xc is rank-deficient "
                "and alpha = 0 provides no regularization") from None
        if alpha == 0.0:
            residual = float(np.linalg.norm(G @ w - rhs))
            if not np.all(np.isfinite(w)) or residual > 1e-8 * (1.0 + float(np.linalg.norm(rhs))):
                raise SingularSystemError(
                    f"normal equations nearly singular at alpha = 0 "
                    f"(residual {residual:.3e}); increase alpha")
    b = ybar - float(w @ xbar)
    w.flags.writeable = False
    return RidgeModel(weights=w, intercept=b, alpha=alpha)


def predict_ridge(model: RidgeModel, X) -> np.ndarray:
    """Per-row prediction w.x + b."""
    X = _as_matrix(X)
    if X.shape[1] != model.weights.shape[0]:
        raise ValidationError(
            f"X has {X.shape[1]} columns, model expects {model.weights.shape[0]}")
    return X @ model.weights + model.intercept
