"""Exact SHAP attributions for linear classifiers and the subset sweep.

For a linear margin f(x) = w.x + b and independent features, the SHAP value
of feature j at sample x is phi_j = w_j * (x_j - mu_j) against a background
mean mu. Attributions are computed in margin (log-odds) space, where the
additivity identity sum_j phi_j = f(x) - f(mu) holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from emprobe.crossval import (PREDICT_THRESHOLD, _clean_grid, _effective_k,
                              _f1_unchecked, grouped_kfold, nested_cv_classify)
from emprobe.dataio import BinaryTask
from emprobe.errors import ValidationError
from emprobe.linmod import LogisticModel, fit_logistic, predict_proba
from emprobe.util import parallel_map



@dataclass(frozen=True)
class Attribution:
    """Per-sample SHAP values and the induced per-feature importance."""

    feature_names: tuple[str, ...]
    phi: np.ndarray
    importance: np.ndarray
    background_mean: np.ndarray
    chosen_c: float | None = None


@dataclass(frozen=True)
class SubsetResult:
    """Outcome of the top-k sweep over a feature ranking."""

    k_grid: tuple[int, ...]
    f1_curve: tuple[float, ...]
    k_star: int
    top_features: tuple[str, ...]

    def __post_init__(self):
        if len(self.k_grid) != len(self.f1_curve):
            raise ValidationError("k_grid and f1_curve misaligned")
        if self.k_star not in self.k_grid:
            raise ValidationError("k_star must come from k_grid")

    def curve(self) -> dict[int, float]:
        return dict(zip(self.k_grid, self.f1_curve))


def linear_shap(model: LogisticModel, X, background_mean,
                feature_names: Sequence[str] | None = None) -> Attribution:
    """Exact SHAP values of the model margin for every row of X."""
    X = np.asarray(X, dtype=np.float64)
    mu = np.asarray(background_mean, dtype=np.float64).ravel()
    d = model.weights.shape[0]
    if X.ndim != 2 or X.shape[1] != d:
        raise ValidationError(f"X has shape {X.shape}, model expects {d} columns")
    if mu.shape[0] != d:
        raise ValidationError(
            f"background_mean has {mu.shape[0]} entries, model expects {d}")
    if feature_names is None:
        feature_names = tuple(f"f{j}" for j in range(d))
    else:
        feature_names = tuple(feature_names)
        if len(feature_names) != d:
            raise ValidationError("feature_names length mismatch")
    phi = model.weights * (X - mu)
    importance = np.abs(phi).mean(axis=0) if X.shape[0] else np.zeros(d)
    phi.flags.writeable = False
    importance.flags.writeable = False
    return Attribution(feature_names=feature_names, phi=phi,
                       importance=importance, background_mean=mu)


def rank_features(attribution: Attribution) -> list[str]:
    """Feature names by descending importance; ties by ascending name."""
    pairs = zip(attribution.feature_names, attribution.importance)
    return [name for name, _ in sorted(pairs, key=lambda p: (-p[1], p[0]))]


def fit_full_and_attribute(task: BinaryTask, c_grid, k_folds: int = 5,
                           seed: int = 0) -> Attribution:
    """One canonical attribution for a task.

    C is chosen by speaker-disjoint k-fold CV over the whole task (pooled
    F1, ties toward the smallest C), one model is refit on all rows, and
    SHAP values are computed on all rows against the full-task column means.
    """
    grid = _clean_grid(c_grid, "c_grid")
    notes: list[str] = []
    k = _effective_k(k_folds, len(set(task.groups)), "k_folds", notes)
    plan = grouped_kfold(task.groups, k, seed)
    fold_idx = plan.fold_of_rows(task.groups)

    best_c, best_score = None, -np.inf
    for c in grid:  # ascending, strict improvement: ties keep smallest C
        oof = np.zeros(task.n, dtype=np.int64)
        for f in range(k):
            test = fold_idx == f
            train = ~test
            if len(np.unique(task.y[train])) < 2:
                raise ValidationError(f"single-class training split (fold {f})")
            model = fit_logistic(task.X[train], task.y[train], c)
            oof[test] = predict_proba(model, task.X[test]) >= PREDICT_THRESHOLD
        score = _f1_unchecked(task.y, oof)
        if score > best_score:
            best_c, best_score = c, score

    model = fit_logistic(task.X, task.y, best_c)
    background = task.X.mean(axis=0)
    attribution = linear_shap(model, task.X, background, task.column_names)
    return Attribution(feature_names=attribution.feature_names,
                       phi=attribution.phi,
                       importance=attribution.importance,
                       background_mean=attribution.background_mean,
                       chosen_c=best_c)


def minimal_subset_search(task: BinaryTask, ranking: Sequence[str],
                          step: int = 10, cap: int | None = None, *,
                          c_grid, k_outer: int = 5, k_inner: int = 5,
                          seed: int = 0) -> SubsetResult:
    """Sweep top-k prefixes of a ranking and find the smallest best k.

    k runs over step, 2*step, ... plus the sweep limit itself (all columns,
    or ``cap``). Each k gets a full nested CV on the top-k columns with the
    same seed, hence the same fold plan. k_star is the smallest k whose
    pooled F1 attains the curve maximum, compared exactly: F1 values are
    ratios of small integers, so equal performance is equal bits.
    """
    if step < 1:
        raise ValidationError(f"step must be >= 1, got {step}")
    if sorted(ranking) != sorted(task.column_names):
        raise ValidationError("ranking must cover exactly the task columns")
    ranking = list(ranking)
    limit = task.d if cap is None else min(int(cap), task.d)
    if limit < 1:
        raise ValidationError(f"cap must be >= 1, got {cap}")
    ks = sorted(set(range(step, limit, step)) | {limit})

    def _point(k: int) -> float:
        report = nested_cv_classify(task.select_columns(ranking[:k]), c_grid,
                                    k_outer=k_outer, k_inner=k_inner, seed=seed)
        return report.pooled_score

    curve = parallel_map(_point, ks)
    k_star = first_max_k(ks, curve)
    return SubsetResult(k_grid=tuple(ks), f1_curve=tuple(curve),
                        k_star=k_star, top_features=tuple(ranking[:k_star]))


def first_max_k(k_grid: Sequence[int], f1_curve: Sequence[float]) -> int:
    """Smallest k whose score attains the curve maximum (exact comparison)."""
    if not k_grid or len(k_grid) != len(f1_curve):
        raise ValidationError("empty or misaligned subset curve")
    best = max(f1_curve)
    return next(k for k, f1 in zip(k_grid, f1_curve) if f1 == best)
