"""eGeMAPSv02 functionals per utterance.

Delegates the signal processing to openSMILE (lazy import; install with
pip install 'emprobe-extract[egemaps]'). Any callable mapping a 16 kHz
float waveform to an ordered (names, values) pair can be substituted.
A companion category map CSV assigning each functional to Energy /
Frequency / Spectral / Temporal ships with the package.
"""

from __future__ import annotations

import logging
import shutil
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from emprobe_extract import ExtractError
from emprobe_extract.audio import TARGET_RATE, load_waveform
from emprobe_extract.manifest import ManifestRow
from emprobe_extract.tables import write_feature_table

logger = logging.getLogger(__name__)

FEATURE_PREFIX = "egemaps."

FunctionalExtractor = Callable[[np.ndarray], tuple[list[str], np.ndarray]]


class OpensmileExtractor:
    """The 88 eGeMAPSv02 functionals through the opensmile package."""

    def __init__(self):
        try:
            import opensmile
        except ImportError as exc:
            raise ExtractError(
                "acoustic extraction needs opensmile "
                "(pip install 'emprobe-extract[egemaps]')") from exc
        self._smile = opensmile.Smile(
            feature_set=opensmile.FeatureSet.eGeMAPSv02,
            feature_level=opensmile.FeatureLevel.Functionals)

    def __call__(self, waveform: np.ndarray) -> tuple[list[str], np.ndarray]:
        frame = self._smile.process_signal(waveform, TARGET_RATE)
        return list(frame.columns), frame.to_numpy()[0].astype(np.float64)


def extract_acoustic(rows: Sequence[ManifestRow], out_path: str | Path,
                     extractor: FunctionalExtractor | None = None) -> int:
    """Extract functionals for every manifest row and write the table CSV.

    Per-file extractor failures (including non-finite outputs) are skipped
    with a warning so no NaN ever reaches the table. Returns the number of
    rows written.
    """
    if extractor is None:
        extractor = OpensmileExtractor()
    records = []
    names = None
    for row in rows:
        try:
            waveform = load_waveform(row.audio_path)
            raw_names, values = extractor(waveform)
        except ExtractError as exc:
            logger.warning("skipping %s: %s", row.utterance_id, exc)
            continue
        except Exception as exc:
            logger.warning("skipping %s: extractor failed (%s)",
                           row.utterance_id, exc)
            continue
        if not np.all(np.isfinite(values)):
            logger.warning("skipping %s: non-finite functional values",
                           row.utterance_id)
            continue
        if names is None:
            names = [FEATURE_PREFIX + n for n in raw_names]
        elif [FEATURE_PREFIX + n for n in raw_names] != names:
            raise ExtractError(f"{row.utterance_id}: functional names changed")
        records.append((row.utterance_id, row.speaker_id, row.dataset_id,
                        row.emotion_label, values))
    if not records:
        raise ExtractError("no acoustic features extracted")
    write_feature_table(out_path, names, records)
    logger.info("wrote %d x %d acoustic table to %s",
                len(records), len(names), out_path)
    return len(records)


def write_category_map(out_path: str | Path,
                       feature_names: Sequence[str] | None = None) -> None:
    """Copy the shipped eGeMAPSv02 category map next to an extracted table.

    When the emitted feature names are supplied, warns about any not covered
    by the map (the analysis pipeline rejects gaps at validation time).
    """
    with resources.as_file(resources.files("emprobe_extract.data")
                           / "egemaps_v02_categories.csv") as src:
        shutil.copyfile(src, out_path)
    if feature_names:
        covered = set()
        with open(out_path, encoding="utf-8") as fh:
            next(fh)
            covered = {line.split(",")[0] for line in fh if line.strip()}
        missing = [n for n in feature_names if n not in covered]
        if missing:
            logger.warning("category map does not cover: %s", missing)
