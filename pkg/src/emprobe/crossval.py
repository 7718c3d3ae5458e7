"""Speaker-disjoint cross-validation with nested hyperparameter selection.

Speakers (not rows) are dealt into folds, so no speaker ever appears in
both sides of a split. Hyperparameters are chosen per outer fold on an
inner speaker-disjoint CV of the outer-training rows, then the refit model
predicts the held-out fold; the pooled score is computed once over the
concatenated out-of-fold predictions (per-fold scores are also reported,
but with few speakers the per-fold test sets are tiny).
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from emprobe.dataio import BinaryTask
from emprobe.errors import ValidationError
from emprobe.linmod import (fit_logistic, fit_ridge, predict_proba,
                            predict_ridge)
from emprobe.util import stable_seed

logger = logging.getLogger(__name__)

PREDICT_THRESHOLD = 0.5


@dataclass(frozen=True)
class FoldPlan:
    """Deterministic speaker -> fold assignment."""

    k: int
    assignment: dict[str, int]
    seed: int

    def fold_of_rows(self, groups: Sequence[str]) -> np.ndarray:
        return np.array([self.assignment[g] for g in groups], dtype=np.int64)

    def digest(self) -> str:
        canon = f"k={self.k};seed={self.seed};" + ";".join(
            f"{spk}={fold}" for spk, fold in sorted(self.assignment.items()))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class CVReport:
    """Outcome of one nested cross-validation run."""

    outer_scores: tuple[float, ...]
    pooled_score: float
    chosen_hyperparams: tuple[float, ...]
    oof_predictions: np.ndarray
    fold_of_rows: np.ndarray
    fold_plan_digest: str
    k_outer: int
    k_inner_per_fold: tuple[int, ...]
    notes: tuple[str, ...] = ()
    oof_probabilities: np.ndarray | None = None


def grouped_kfold(groups: Sequence[str], k: int, seed: int) -> FoldPlan:
    """Assign speakers to k folds: seeded shuffle, then round-robin deal."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    speakers = sorted(set(groups))
    if len(speakers) < k:
        raise ValidationError(
            f"{len(speakers)} distinct speakers cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(speakers))
    assignment = {speakers[idx]: i % k for i, idx in enumerate(order)}
    return FoldPlan(k=k, assignment=assignment, seed=seed)


def f1_score(y_true, y_pred) -> float:
    """F1 of the positive class; 0.0 when precision + recall is 0."""
    y_true = np.asarray(y_true).ravel()
    y_pred = np.asarray(y_pred).ravel()
    if y_true.size == 0:
        raise ValidationError("empty input")
    if y_true.shape != y_pred.shape:
        raise ValidationError(
            f"length mismatch: {y_true.shape[0]} vs {y_pred.shape[0]}")
    if not np.any(y_true == 1):
        raise ValidationError("y_true contains no positives")
    return _f1_unchecked(y_true, y_pred)


def _f1_unchecked(y_true, y_pred) -> float:
    tp = float(np.sum((y_true == 1) & (y_pred == 1)))
    fp = float(np.sum((y_true == 0) & (y_pred == 1)))
    fn = float(np.sum((y_true == 1) & (y_pred == 0)))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def rmse(y_true, y_pred) -> float:
    """Root mean squared error."""
    y_true = np.asarray(y_true, dtype=np.float64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
    if y_true.size == 0:
        raise ValidationError("empty input")
    if y_true.shape != y_pred.shape:
        raise ValidationError(
            f"length mismatch: {y_true.shape[0]} vs {y_pred.shape[0]}")
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))


def _clean_grid(grid, name: str, allow_zero: bool = False) -> list[float]:
    values = sorted({float(v) for v in grid})
    if not values:
        raise ValidationError(f"{name} is empty")
    low = 0.0 if allow_zero else np.nextafter(0.0, 1.0)
    for v in values:
        if not np.isfinite(v) or v < low:
            raise ValidationError(f"{name} contains invalid value {v}")
    return values


def _effective_k(requested: int, n_speakers: int, what: str,
                 notes: list[str]) -> int:
    if requested < 2:
        raise ValidationError(f"{what} must be >= 2, got {requested}")
    k = min(requested, n_speakers)
    if k < 2:
        raise ValidationError(
            f"{what}: need at least 2 speakers, got {n_speakers}")
    if k < requested:
        msg = (f"{what} reduced from {requested} to {k}: "
               f"only {n_speakers} speakers available")
        logger.warning(msg)
        notes.append(msg)
    return k


def nested_cv_classify(task: BinaryTask, c_grid, k_outer: int = 5,
                       k_inner: int = 5, seed: int = 0) -> CVReport:
    """Nested speaker-disjoint CV for the logistic classifier.

    Per outer fold, the inner CV picks the C with the best mean inner F1
    (ties broken toward the smallest C, i.e. stronger regularization);
    the pooled score is the F1 over all out-of-fold predictions.
    """
    grid = _clean_grid(c_grid, "c_grid")
    notes: list[str] = []
    groups = np.array(task.groups)
    k_out = _effective_k(k_outer, len(set(task.groups)), "k_outer", notes)
    plan = grouped_kfold(task.groups, k_out, seed)
    fold_idx = plan.fold_of_rows(task.groups)

    n = task.n
    oof_pred = np.zeros(n, dtype=np.int64)
    oof_proba = np.zeros(n)
    outer_scores, chosen, k_inner_eff = [], [], []
    for f in range(k_out):
        test = fold_idx == f
        train = ~test
        X_tr, y_tr = task.X[train], task.y[train]
        g_tr = groups[train]
        k_in = _effective_k(k_inner, len(set(g_tr)), f"outer fold {f}: k_inner",
                            notes)
        k_inner_eff.append(k_in)
        inner_plan = grouped_kfold(list(g_tr), k_in, stable_seed(seed, "inner", f))
        inner_idx = inner_plan.fold_of_rows(list(g_tr))

        best_c, best_score = None, -np.inf
        for c in grid:  # ascending, strict improvement: ties keep smallest C
            fold_scores = []
            for j in range(k_in):
                ite = inner_idx == j
                itr = ~ite
                y_fit = y_tr[itr]
                if len(np.unique(y_fit)) < 2:
                    raise ValidationError(
                        f"single-class training split "
                        f"(outer fold {f}, inner fold {j})")
                model = fit_logistic(X_tr[itr], y_fit, c)
                pred = (predict_proba(model, X_tr[ite]) >= PREDICT_THRESHOLD)
                fold_scores.append(_f1_unchecked(y_tr[ite], pred.astype(np.int64)))
            score = float(np.mean(fold_scores))
            if score > best_score:
                best_c, best_score = c, score
        if len(np.unique(y_tr)) < 2:
            raise ValidationError(f"single-class training split (outer fold {f})")
        model = fit_logistic(X_tr, y_tr, best_c)
        proba = predict_proba(model, task.X[test])
        pred = (proba >= PREDICT_THRESHOLD).astype(np.int64)
        oof_pred[test] = pred
        oof_proba[test] = proba
        outer_scores.append(_f1_unchecked(task.y[test], pred))
        chosen.append(best_c)

    return CVReport(outer_scores=tuple(outer_scores),
                    pooled_score=_f1_unchecked(task.y, oof_pred),
                    chosen_hyperparams=tuple(chosen),
                    oof_predictions=oof_pred,
                    fold_of_rows=fold_idx,
                    fold_plan_digest=plan.digest(),
                    k_outer=k_out,
                    k_inner_per_fold=tuple(k_inner_eff),
                    notes=tuple(notes),
                    oof_probabilities=oof_proba)


def nested_cv_regress(X, y, groups: Sequence[str], alpha_grid,
                      k_outer: int = 5, k_inner: int = 5,
                      seed: int = 0) -> CVReport:
    """Nested speaker-disjoint CV for the ridge prober.

    Per outer fold, the inner CV picks the alpha with the lowest mean inner
    RMSE (ties broken toward the largest alpha); the pooled score is the
    RMSE over all out-of-fold predictions.
    """
    grid = _clean_grid(alpha_grid, "alpha_grid", allow_zero=True)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    groups = list(groups)
    if X.ndim != 2 or X.shape[0] != len(y) or len(groups) != len(y):
        raise ValidationError("X, y and groups must agree on the row count")
    notes: list[str] = []
    garr = np.array(groups)
    k_out = _effective_k(k_outer, len(set(groups)), "k_outer", notes)
    plan = grouped_kfold(groups, k_out, seed)
    fold_idx = plan.fold_of_rows(groups)

    oof_pred = np.zeros(len(y))
    outer_scores, chosen, k_inner_eff = [], [], []
    for f in range(k_out):
        test = fold_idx == f
        train = ~test
        X_tr, y_tr = X[train], y[train]
        g_tr = garr[train]
        k_in = _effective_k(k_inner, len(set(g_tr)), f"outer fold {f}: k_inner",
                            notes)
        k_inner_eff.append(k_in)
        inner_plan = grouped_kfold(list(g_tr), k_in, stable_seed(seed, "inner", f))
        inner_idx = inner_plan.fold_of_rows(list(g_tr))

        best_a, best_score = None, np.inf
        for a in reversed(grid):  # descending, ties keep largest alpha
            fold_scores = []
            for j in range(k_in):
                ite = inner_idx == j
                itr = ~ite
                model = fit_ridge(X_tr[itr], y_tr[itr], a)
                fold_scores.append(rmse(y_tr[ite], predict_ridge(model, X_tr[ite])))
            score = float(np.mean(fold_scores))
            if score < best_score:
                best_a, best_score = a, score
        model = fit_ridge(X_tr, y_tr, best_a)
        pred = predict_ridge(model, X[test])
        oof_pred[test] = pred
        outer_scores.append(rmse(y[test], pred))
        chosen.append(best_a)

    return CVReport(outer_scores=tuple(outer_scores),
                    pooled_score=rmse(y, oof_pred),
                    chosen_hyperparams=tuple(chosen),
                    oof_predictions=oof_pred,
                    fold_of_rows=fold_idx,
                    fold_plan_digest=plan.digest(),
                    k_outer=k_out,
                    k_inner_per_fold=tuple(k_inner_eff),
                    notes=tuple(notes))
