"""Canonical feature-table CSV writer.

The format is the external interface shared with the emprobe pipeline:
a header of ``utterance_id,speaker_id,dataset_id,emotion_label`` followed by
numeric feature columns, UTF-8, '.' decimal separator. Floats are written
with repr so values round-trip exactly.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Sequence

from emprobe_extract import ExtractError

METADATA_COLUMNS = ("utterance_id", "speaker_id", "dataset_id", "emotion_label")


def write_feature_table(path: str | Path, feature_names: Sequence[str],
                        rows: Sequence[tuple]) -> None:
    """Write rows of (utterance_id, speaker_id, dataset_id, label, values).

    Refuses duplicate utterance ids and non-finite values so every emitted
    table passes the pipeline's validation.
    """
    names = list(feature_names)
    if not names or len(set(names)) != len(names):
        raise ExtractError("feature names must be non-empty and unique")
    seen = set()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(METADATA_COLUMNS) + names)
        for utterance_id, speaker_id, dataset_id, label, values in rows:
            if utterance_id in seen:
                raise ExtractError(f"duplicate utterance_id {utterance_id!r}")
            seen.add(utterance_id)
            if len(values) != len(names):
                raise ExtractError(
                    f"{utterance_id!r}: {len(values)} values for {len(names)} columns")
            cells = []
            for name, v in zip(names, values):
                v = float(v)
                if not math.isfinite(v):
                    raise ExtractError(
                        f"{utterance_id!r}, column {name!r}: non-finite value")
                cells.append(repr(v))
            writer.writerow([utterance_id, speaker_id, dataset_id, label] + cells)
