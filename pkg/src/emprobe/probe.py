"""Probing regressions and the information-increase metric.

Each acoustic feature is predicted twice from the embedding, once with all
dimensions and once with the top dimensions selected for the emotion, using
the identical speaker-disjoint fold plan. The information increase

    (rmse_all / rmse_top) * (1 / rmse_top)

rewards features that the top dimensions encode better than the full
embedding, weighted by how well the top dimensions encode them at all.
Targets are z-scored over the probed rows first so RMSEs are comparable
across features and the 1/rmse_top weighting is meaningful.
"""

from __future__ import annotations

import csv
import logging
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from emprobe.attrib import Attribution
from emprobe.crossval import nested_cv_regress
from emprobe.dataio import FeatureTable
from emprobe.errors import EmprobeError, ValidationError
from emprobe.util import parallel_map

logger = logging.getLogger(__name__)

CATEGORIES = ("Energy", "Frequency", "Spectral", "Temporal")
RMSE_FLOOR = 1e-9


@dataclass(frozen=True)
class CategoryMap:
    """Maps acoustic feature names to one of the four categories."""

    mapping: dict[str, str]

    def __post_init__(self):
        bad = {c for c in self.mapping.values() if c not in CATEGORIES}
        if bad:
            raise ValidationError(
                f"unknown categories {sorted(bad)}; expected one of {CATEGORIES}")

    def category_of(self, feature_name: str) -> str:
        try:
            return self.mapping[feature_name]
        except KeyError:
            raise ValidationError(
                f"feature {feature_name!r} missing from category map") from None

    def missing_from(self, feature_names: Sequence[str]) -> list[str]:
        return [n for n in feature_names if n not in self.mapping]


def load_category_map(path: str | Path) -> CategoryMap:
    """Read a feature_name,category CSV; unknown categories are rejected."""
    path = Path(path)
    mapping: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["feature_name", "category"]:
            raise ValidationError(
                f"{path}: header must be feature_name,category")
        for i, cells in enumerate(reader, start=1):
            if len(cells) < 2 or not cells[0]:
                raise ValidationError(f"{path}: row {i}: malformed entry")
            name, category = cells[0], cells[1]
            if category not in CATEGORIES:
                raise ValidationError(
                    f"{path}: row {i}: unknown category {category!r} "
                    f"for {name!r}; expected one of {CATEGORIES}")
            if name in mapping:
                raise ValidationError(f"{path}: row {i}: duplicate feature {name!r}")
            mapping[name] = category
    if not mapping:
        raise ValidationError(f"{path}: empty category map")
    return CategoryMap(mapping=mapping)


@dataclass(frozen=True)
class ProbeResult:
    """Probe outcome for one acoustic feature (RMSEs in standardized units)."""

    feature_name: str
    rmse_all: float
    rmse_top: float
    info_increase: float
    category: str


@dataclass(frozen=True)
class ProbeSuite:
    results: tuple[ProbeResult, ...]
    excluded: tuple[str, ...]
    fold_plan_digest: str


@dataclass(frozen=True)
class StandardizedTargets:
    utterance_ids: tuple[str, ...]
    matrix: np.ndarray
    names: tuple[str, ...]
    excluded: tuple[str, ...]


@dataclass(frozen=True)
class CategoryAggregate:
    category: str
    mean_ii: float
    median_ii: float
    count: int
    values: tuple[float, ...]


def standardize_targets(acoustic_table: FeatureTable,
                        utterance_ids: Sequence[str]) -> StandardizedTargets:
    """Z-score each acoustic column over the given row subset.

    Columns that are constant on the subset carry no probe-able signal and
    are excluded (they are reported, not errors).
    """
    ids = tuple(utterance_ids)
    if not ids:
        raise ValidationError("empty row subset")
    by_id = acoustic_table.row_by_id()
    missing = [u for u in ids if u not in by_id]
    if missing:
        raise ValidationError(
            f"utterances missing from acoustic table: {missing}")
    sub = np.stack([by_id[u].values for u in ids]).astype(np.float64)
    mu = sub.mean(axis=0)
    sd = sub.std(axis=0)  # population
    keep = sd != 0.0
    excluded = tuple(n for n, k in zip(acoustic_table.feature_names, keep) if not k)
    if excluded:
        logger.info("excluding %d constant target column(s): %s",
                    len(excluded), list(excluded))
    z = (sub[:, keep] - mu[keep]) / sd[keep]
    names = tuple(n for n, k in zip(acoustic_table.feature_names, keep) if k)
    return StandardizedTargets(utterance_ids=ids, matrix=z, names=names,
                               excluded=excluded)


def information_increase(rmse_all: float, rmse_top: float) -> float:
    """(rmse_all / rmse_top) * (1 / rmse_top), with both inputs floored.

    The metric is undefined at zero RMSE; flooring at 1e-9 preserves the
    ordering while avoiding infinities. Flooring events are logged.
    """
    for name, value in (("rmse_all", rmse_all), ("rmse_top", rmse_top)):
        if not (np.isfinite(value) and value >= 0.0):
            raise ValidationError(f"{name} must be a nonnegative number, got {value}")
    if rmse_all < RMSE_FLOOR or rmse_top < RMSE_FLOOR:
        logger.warning("information_increase: flooring rmse_all=%.3e rmse_top=%.3e "
                       "at %.1e", rmse_all, rmse_top, RMSE_FLOOR)
    a = max(float(rmse_all), RMSE_FLOOR)
    t = max(float(rmse_top), RMSE_FLOOR)
    return (a / t) * (1.0 / t)


def probe_feature(X, target, groups, alpha_grid, seed: int = 0,
                  k_outer: int = 5, k_inner: int = 5) -> float:
    """Pooled out-of-fold RMSE for predicting one target from X."""
    report = nested_cv_regress(X, target, groups, alpha_grid,
                               k_outer=k_outer, k_inner=k_inner, seed=seed)
    return report.pooled_score


def run_probe_suite(embedding_table: FeatureTable, acoustic_table: FeatureTable,
                    utterance_ids: Sequence[str], top_features: Sequence[str],
                    category_map: CategoryMap, alpha_grid, seed: int = 0,
                    k_outer: int = 5, k_inner: int = 5) -> ProbeSuite:
    """Probe every acoustic feature from all vs. top embedding dimensions.

    Both regressions for a feature run on identical rows with the identical
    fold plan (same groups, same seed); the suite checks the recorded plan
    digests and refuses to mix plans.
    """
    ids = tuple(utterance_ids)
    emb_by_id = embedding_table.row_by_id()
    missing = [u for u in ids if u not in emb_by_id]
    if missing:
        raise ValidationError(
            f"utterances missing from embedding table: {missing}")
    targets = standardize_targets(acoustic_table, ids)

    ac_by_id = acoustic_table.row_by_id()
    for u in ids:
        if emb_by_id[u].speaker_id != ac_by_id[u].speaker_id:
            raise ValidationError(
                f"speaker mismatch between tables for utterance {u!r}")

    unmapped = category_map.missing_from(targets.names)
    if unmapped:
        raise ValidationError(
            f"acoustic features missing from category map: {unmapped}")

    X_all = np.stack([emb_by_id[u].values for u in ids]).astype(np.float64)
    top = tuple(top_features)
    col_pos = {n: j for j, n in enumerate(embedding_table.feature_names)}
    bad = [n for n in top if n not in col_pos]
    if bad:
        raise ValidationError(f"top features not in embedding table: {bad}")
    X_top = X_all[:, [col_pos[n] for n in top]]
    groups = [emb_by_id[u].speaker_id for u in ids]

    def _one(j: int) -> tuple[ProbeResult, str]:
        name = targets.names[j]
        t = targets.matrix[:, j]
        rep_all = nested_cv_regress(X_all, t, groups, alpha_grid,
                                    k_outer=k_outer, k_inner=k_inner, seed=seed)
        rep_top = nested_cv_regress(X_top, t, groups, alpha_grid,
                                    k_outer=k_outer, k_inner=k_inner, seed=seed)
        if rep_all.fold_plan_digest != rep_top.fold_plan_digest:
            raise EmprobeError(
                f"fold plans diverged while probing {name!r}: "
                f"{rep_all.fold_plan_digest} vs {rep_top.fold_plan_digest}")
        result = ProbeResult(feature_name=name,
                             rmse_all=rep_all.pooled_score,
                             rmse_top=rep_top.pooled_score,
                             info_increase=information_increase(
                                 rep_all.pooled_score, rep_top.pooled_score),
                             category=category_map.category_of(name))
        return result, rep_all.fold_plan_digest

    pairs = parallel_map(_one, range(len(targets.names)))
    digests = {digest for _, digest in pairs}
    if len(digests) > 1:
        raise EmprobeError(f"fold plans diverged across features: {sorted(digests)}")
    return ProbeSuite(results=tuple(r for r, _ in pairs),
                      excluded=targets.excluded,
                      fold_plan_digest=digests.pop() if digests else "")


def aggregate_by_category(results: Sequence[ProbeResult],
                          category_map: CategoryMap) -> list[CategoryAggregate]:
    """Mean/median information increase per category, in canonical order."""
    if not results:
        raise ValidationError("no probe results to aggregate")
    buckets: dict[str, list[float]] = {c: [] for c in CATEGORIES}
    for r in results:
        buckets[category_map.category_of(r.feature_name)].append(r.info_increase)
    out = []
    for cat in CATEGORIES:
        values = buckets[cat]
        if not values:
            continue
        out.append(CategoryAggregate(category=cat,
                                     mean_ii=float(np.mean(values)),
                                     median_ii=float(statistics.median(values)),
                                     count=len(values),
                                     values=tuple(values)))
    return out


def category_shap_profile(attribution: Attribution,
                          category_map: CategoryMap) -> dict[str, float]:
    """Share of total SHAP importance per category; shares sum to 1."""
    totals = {c: 0.0 for c in CATEGORIES}
    for name, imp in zip(attribution.feature_names, attribution.importance):
        totals[category_map.category_of(name)] += float(imp)
    grand = sum(totals.values())
    if grand <= 0.0:
        raise ValidationError("total importance is zero; nothing to normalize")
    return {c: totals[c] / grand for c in CATEGORIES}
