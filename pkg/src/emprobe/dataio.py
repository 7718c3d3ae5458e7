"""Canonical feature tables: loading, validation, normalization, task building.

A table is a CSV with the metadata columns ``utterance_id, speaker_id,
dataset_id, emotion_label`` (in that order) followed by numeric feature
columns. Two tables describe the same utterances in different
representations (e.g. embedding dimensions vs. acoustic functionals) and are
joined by ``utterance_id``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from emprobe.errors import ValidationError

METADATA_COLUMNS = ("utterance_id", "speaker_id", "dataset_id", "emotion_label")
DEFAULT_NEUTRAL_LABEL = "neutral"


@dataclass(frozen=True)
class UtteranceRecord:
    """Metadata plus the feature vector of one utterance."""

    utterance_id: str
    speaker_id: str
    dataset_id: str
    emotion_label: str
    values: np.ndarray


@dataclass(frozen=True)
class FeatureTable:
    """An immutable per-utterance feature matrix with named columns.

    Build instances through :meth:`from_rows` or :func:`load_feature_table`;
    both enforce the table invariants (unique utterance ids, unique non-empty
    feature names, finite values, consistent row width).
    """

    rows: tuple[UtteranceRecord, ...]
    feature_names: tuple[str, ...]
    representation_id: str

    @classmethod
    def from_rows(cls, rows: Iterable[UtteranceRecord], feature_names: Sequence[str],
                  representation_id: str) -> "FeatureTable":
        rows = tuple(rows)
        feature_names = tuple(feature_names)
        if not feature_names:
            raise ValidationError("a feature table needs at least one feature column")
        if len(set(feature_names)) != len(feature_names):
            dupes = sorted({n for n in feature_names if feature_names.count(n) > 1})
            raise ValidationError(f"duplicate feature names: {dupes}")
        if any(not n for n in feature_names):
            raise ValidationError("feature names must be non-empty")
        seen: dict[str, int] = {}
        for i, rec in enumerate(rows, start=1):
            if not rec.utterance_id:
                raise ValidationError(f"row {i}: empty utterance_id")
            if rec.utterance_id in seen:
                raise ValidationError(
                    f"duplicate utterance_id {rec.utterance_id!r} "
                    f"(rows {seen[rec.utterance_id]} and {i})")
            seen[rec.utterance_id] = i
            if not rec.speaker_id:
                raise ValidationError(f"row {i}: empty speaker_id")
            if not rec.emotion_label:
                raise ValidationError(f"row {i}: empty emotion_label")
            if rec.values.shape != (len(feature_names),):
                raise ValidationError(
                    f"row {i}: expected {len(feature_names)} values, "
                    f"got {rec.values.shape[0]}")
            if not np.all(np.isfinite(rec.values)):
                j = int(np.flatnonzero(~np.isfinite(rec.values))[0])
                raise ValidationError(
                    f"row {i}, column {feature_names[j]!r}: non-finite value")
        return cls(rows=rows, feature_names=feature_names,
                   representation_id=representation_id)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def utterance_ids(self) -> tuple[str, ...]:
        return tuple(r.utterance_id for r in self.rows)

    @property
    def speaker_ids(self) -> tuple[str, ...]:
        return tuple(r.speaker_id for r in self.rows)

    @property
    def emotion_labels(self) -> tuple[str, ...]:
        return tuple(r.emotion_label for r in self.rows)

    def matrix(self) -> np.ndarray:
        """Row-major float64 copy of the feature values (n x d)."""
        if not self.rows:
            return np.empty((0, len(self.feature_names)))
        return np.stack([r.values for r in self.rows]).astype(np.float64)

    def row_by_id(self) -> dict[str, UtteranceRecord]:
        return {r.utterance_id: r for r in self.rows}


@dataclass(frozen=True)
class BinaryTask:
    """One emotion-vs-neutral classification problem.

    ``y`` is 1 for the emotion rows and 0 for neutral; ``groups`` carries the
    speaker of each row so splits can be made speaker-disjoint.
    """

    emotion: str
    neutral_label: str
    X: np.ndarray
    y: np.ndarray
    groups: tuple[str, ...]
    column_names: tuple[str, ...]
    utterance_ids: tuple[str, ...]

    def __post_init__(self):
        n = self.X.shape[0]
        if not (len(self.y) == len(self.groups) == len(self.utterance_ids) == n):
            raise ValidationError("task rows misaligned")
        if self.X.shape[1] != len(self.column_names):
            raise ValidationError("task columns misaligned")
        npos = int(self.y.sum())
        if npos == 0 or npos == n:
            raise ValidationError(
                f"task for {self.emotion!r} needs both classes "
                f"({npos} positives of {n} rows)")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def select_columns(self, columns: Sequence[str]) -> "BinaryTask":
        """Project onto a column subset, in the given order."""
        idx = _column_indices(self.column_names, columns)
        return BinaryTask(emotion=self.emotion, neutral_label=self.neutral_label,
                          X=self.X[:, idx].copy(), y=self.y,
                          groups=self.groups, column_names=tuple(columns),
                          utterance_ids=self.utterance_ids)


def _column_indices(available: Sequence[str], requested: Sequence[str]) -> list[int]:
    pos = {name: i for i, name in enumerate(available)}
    idx = []
    for name in requested:
        if name not in pos:
            raise ValidationError(f"unknown feature column {name!r}")
        idx.append(pos[name])
    return idx


def load_feature_table(path: str | Path, representation_id: str) -> FeatureTable:
    """Load and validate a canonical table CSV.

    Raises ValidationError naming the offending row and column for malformed
    metadata, duplicate ids, and non-numeric or non-finite feature values.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        if tuple(header[: len(METADATA_COLUMNS)]) != METADATA_COLUMNS:
            raise ValidationError(
                f"{path}: header must start with {','.join(METADATA_COLUMNS)}, "
                f"got {','.join(header[:len(METADATA_COLUMNS)])}")
        feature_names = tuple(header[len(METADATA_COLUMNS):])
        if not feature_names:
            raise ValidationError(f"{path}: no feature columns")
        rows = []
        for i, cells in enumerate(reader, start=1):
            if len(cells) != len(header):
                raise ValidationError(
                    f"{path}: row {i}: expected {len(header)} cells, got {len(cells)}")
            meta, raw = cells[: len(METADATA_COLUMNS)], cells[len(METADATA_COLUMNS):]
            values = np.empty(len(raw))
            for j, cell in enumerate(raw):
                try:
                    v = float(cell)
                except ValueError:
                    raise ValidationError(
                        f"{path}: row {i}, column {feature_names[j]!r}: "
                        f"non-numeric value {cell!r}") from None
                if not math.isfinite(v):
                    raise ValidationError(
                        f"{path}: row {i}, column {feature_names[j]!r}: "
                        f"non-finite value {cell!r}")
                values[j] = v
            values.flags.writeable = False
            rows.append(UtteranceRecord(*meta, values=values))
    try:
        return FeatureTable.from_rows(rows, feature_names, representation_id)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def save_feature_table(table: FeatureTable, path: str | Path) -> None:
    """Write a table back to the canonical CSV format.

    Floats are written with repr, which round-trips exactly, so
    load -> save -> load reproduces the table bit for bit.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(METADATA_COLUMNS) + list(table.feature_names))
        for rec in table.rows:
            writer.writerow(
                [rec.utterance_id, rec.speaker_id, rec.dataset_id, rec.emotion_label]
                + [repr(float(v)) for v in rec.values])


def speaker_normalize(table: FeatureTable) -> FeatureTable:
    """Z-score every feature within each speaker.

    Uses the speaker's mean and population standard deviation over all of
    that speaker's utterances. Columns with zero variance for a speaker map
    to 0 for that speaker, so single-utterance speakers are well defined.
    """
    mat = table.matrix()
    speakers = np.array(table.speaker_ids)
    out = np.empty_like(mat)
    for spk in sorted(set(table.speaker_ids)):
        idx = np.flatnonzero(speakers == spk)
        block = mat[idx]
        mu = block.mean(axis=0)
        sd = block.std(axis=0)  # population (divide by n)
        z = (block - mu) / np.where(sd == 0.0, 1.0, sd)
        z[:, sd == 0.0] = 0.0
        out[idx] = z
    rows = []
    for rec, values in zip(table.rows, out):
        values.flags.writeable = False
        rows.append(UtteranceRecord(rec.utterance_id, rec.speaker_id,
                                    rec.dataset_id, rec.emotion_label, values))
    return FeatureTable(rows=tuple(rows), feature_names=table.feature_names,
                        representation_id=table.representation_id)


def make_binary_task(table: FeatureTable, emotion: str,
                     neutral_label: str = DEFAULT_NEUTRAL_LABEL,
                     columns: Sequence[str] | None = None) -> BinaryTask:
    """Build the emotion-vs-neutral task from a table.

    Keeps only rows labeled ``emotion`` or ``neutral_label`` (source order
    preserved), with y=1 on the emotion rows. ``columns`` restricts and
    orders the feature columns; default is all of them.
    """
    if emotion == neutral_label:
        raise ValidationError("emotion and neutral label must differ")
    labels = table.emotion_labels
    for wanted in (emotion, neutral_label):
        if wanted not in labels:
            raise ValidationError(f"label {wanted!r} not present in table "
                                  f"{table.representation_id!r}")
    names = tuple(columns) if columns is not None else table.feature_names
    col_idx = _column_indices(table.feature_names, names)
    keep = [i for i, lab in enumerate(labels) if lab in (emotion, neutral_label)]
    mat = table.matrix()
    X = mat[np.ix_(keep, col_idx)]
    y = np.array([1 if labels[i] == emotion else 0 for i in keep], dtype=np.int64)
    groups = tuple(table.rows[i].speaker_id for i in keep)
    utt = tuple(table.rows[i].utterance_id for i in keep)
    return BinaryTask(emotion=emotion, neutral_label=neutral_label, X=X, y=y,
                      groups=groups, column_names=names, utterance_ids=utt)
