"""Dataset manifests: one row per utterance with its audio path.

Filename conventions:

* RAVDESS speech files are named
  ``<modality>-<channel>-<emotion>-<intensity>-<statement>-<repetition>-<actor>.wav``
  (e.g. ``03-01-05-01-01-01-12.wav``), emotion codes 01..08. Only the
  speech channel (``01``) is kept; song files are skipped with a warning.
* SAVEE files are ``<speaker>_<code><nn>.wav`` (flat, e.g. ``DC_a01.wav``)
  or ``<speaker>/<code><nn>.wav`` (the AudioData layout), with codes
  a/d/f/h/n/sa/su.

Raw labels are then mapped to a shared vocabulary (anger, disgust, fear,
joy, sadness, surprise, neutral; RAVDESS's extra "calm" passes through) via
the editable data/emotion_vocabulary.csv.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from emprobe_extract import ExtractError

logger = logging.getLogger(__name__)

RAVDESS_EMOTIONS = {"01": "neutral", "02": "calm", "03": "happy",
                    "04": "sad", "05": "angry", "06": "fearful",
                    "07": "disgust", "08": "surprised"}
SAVEE_EMOTIONS = {"a": "anger", "d": "disgust", "f": "fear", "h": "happiness",
                  "n": "neutral", "sa": "sadness", "su": "surprise"}
_SAVEE_NAME = re.compile(r"^(?:(?P<spk>[A-Za-z]{2})_)?(?P<code>sa|su|[adfhn])(?P<num>\d+)$")
_RAVDESS_NAME = re.compile(r"^\d{2}(-\d{2}){6}$")


@dataclass(frozen=True)
class ManifestRow:
    utterance_id: str
    speaker_id: str
    dataset_id: str
    emotion_label: str
    audio_path: Path


def load_emotion_vocabulary() -> dict[tuple[str, str], str]:
    mapping = {}
    with resources.as_file(resources.files("emprobe_extract.data")
                           / "emotion_vocabulary.csv") as path:
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                mapping[(row["dataset"], row["raw_label"])] = row["canonical_label"]
    return mapping


def build_manifest(dataset_root: str | Path, dataset_id: str) -> list[ManifestRow]:
    """Scan a dataset tree and return manifest rows in sorted path order.

    Unparseable audio filenames are skipped with a warning; an empty scan is
    an error.
    """
    root = Path(dataset_root)
    if not root.is_dir():
        raise ExtractError(f"dataset root {root} is not a directory")
    if dataset_id not in ("ravdess", "savee"):
        raise ExtractError(f"unknown dataset_id {dataset_id!r} "
                           "(expected ravdess or savee)")
    vocabulary = load_emotion_vocabulary()
    files = sorted(root.rglob("*.wav")) + sorted(root.rglob("*.WAV"))
    rows, skipped = [], 0
    for path in files:
        parsed = (_parse_ravdess(path) if dataset_id == "ravdess"
                  else _parse_savee(path))
        if parsed is None:
            skipped += 1
            logger.warning("skipping unrecognized file name: %s", path)
            continue
        speaker_id, raw_label = parsed
        label = vocabulary.get((dataset_id, raw_label))
        if label is None:
            raise ExtractError(
                f"label {raw_label!r} missing from the emotion vocabulary "
                f"for {dataset_id}")
        rows.append(ManifestRow(utterance_id=path.stem, speaker_id=speaker_id,
                                dataset_id=dataset_id, emotion_label=label,
                                audio_path=path))
    if skipped:
        logger.warning("%s: skipped %d unrecognized file(s)", dataset_id, skipped)
    if not rows:
        raise ExtractError(f"no audio files found under {root}")
    ids = [r.utterance_id for r in rows]
    if len(set(ids)) != len(ids):
        # same stem in different directories (e.g. SAVEE AudioData layout):
        # qualify with the speaker
        rows = [ManifestRow(f"{r.speaker_id}_{r.utterance_id}", r.speaker_id,
                            r.dataset_id, r.emotion_label, r.audio_path)
                if ids.count(r.utterance_id) > 1 else r for r in rows]
        ids = [r.utterance_id for r in rows]
        if len(set(ids)) != len(ids):
            raise ExtractError("could not derive unique utterance ids")
    return rows


def _parse_ravdess(path: Path):
    if not _RAVDESS_NAME.match(path.stem):
        return None
    fields = path.stem.split("-")
    if fields[1] != "01":  # keep the speech channel, skip song recordings
        return None
    raw = RAVDESS_EMOTIONS.get(fields[2])
    if raw is None:
        return None
    return f"Actor_{fields[6]}", raw


def _parse_savee(path: Path):
    match = _SAVEE_NAME.match(path.stem)
    if match is None:
        return None
    speaker = match.group("spk")
    if speaker is None:
        # nested layout: speaker is the directory name (two initials)
        parent = path.parent.name
        if not re.fullmatch(r"[A-Za-z]{2}", parent):
            return None
        speaker = parent
    return speaker, SAVEE_EMOTIONS[match.group("code")]


def save_manifest(rows, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["utterance_id", "speaker_id", "dataset_id",
                         "emotion_label", "audio_path"])
        for r in rows:
            writer.writerow([r.utterance_id, r.speaker_id, r.dataset_id,
                             r.emotion_label, str(r.audio_path)])


def load_manifest(path: str | Path) -> list[ManifestRow]:
    expected = ["utterance_id", "speaker_id", "dataset_id", "emotion_label",
                "audio_path"]
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            raise ExtractError(f"{path}: manifest header must be "
                               f"{','.join(expected)}")
        for cells in reader:
            if len(cells) != 5 or not all(cells[:2]):
                raise ExtractError(f"{path}: malformed manifest row {cells}")
            rows.append(ManifestRow(cells[0], cells[1], cells[2], cells[3],
                                    Path(cells[4])))
    if not rows:
        raise ExtractError(f"{path}: empty manifest")
    ids = [r.utterance_id for r in rows]
    if len(set(ids)) != len(ids):
        raise ExtractError(f"{path}: duplicate utterance ids")
    return rows
