"""Utterance embeddings: frame-level model outputs mean-pooled over time.

The default encoder wraps WavLM Large through transformers (imported lazily
so the package works without torch installed); any callable mapping a 16 kHz
float waveform to a (frames x dim) array can be substituted, which is also
how the tests run without downloading a model. The pooled layer defaults to
the final one and is exposed as a flag.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from emprobe_extract import ExtractError
from emprobe_extract.audio import load_waveform
from emprobe_extract.manifest import ManifestRow
from emprobe_extract.tables import write_feature_table

logger = logging.getLogger(__name__)

DEFAULT_MODEL_ID = "microsoft/wavlm-large"

Encoder = Callable[[np.ndarray], np.ndarray]


class WavlmEncoder:
    """Frame representations from a pretrained WavLM-style model."""

    def __init__(self, model_id: str = DEFAULT_MODEL_ID, layer: int = -1,
                 device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModel
        except ImportError as exc:
            raise ExtractError(
                "embedding extraction needs torch and transformers "
                "(pip install 'emprobe-extract[wavlm]')") from exc
        try:
            self._model = AutoModel.from_pretrained(model_id).to(device).eval()
        except Exception as exc:
            raise ExtractError(f"could not load model {model_id!r}: {exc}") from exc
        self._torch = torch
        self._layer = layer
        self._device = device

    def __call__(self, waveform: np.ndarray) -> np.ndarray:
        torch = self._torch
        with torch.no_grad():
            batch = torch.from_numpy(waveform[None, :]).float().to(self._device)
            out = self._model(batch, output_hidden_states=True)
        frames = out.hidden_states[self._layer][0]
        return frames.cpu().numpy()


def extract_embeddings(rows: Sequence[ManifestRow], out_path: str | Path,
                       encoder: Encoder | None = None,
                       model_id: str = DEFAULT_MODEL_ID,
                       layer: int = -1) -> int:
    """Embed every manifest row and write the canonical table CSV.

    Unreadable or empty audio files are skipped with a warning; a model that
    cannot be loaded is fatal. Returns the number of rows written.
    """
    if encoder is None:
        encoder = WavlmEncoder(model_id=model_id, layer=layer)
    records = []
    dim = None
    for row in rows:
        try:
            waveform = load_waveform(row.audio_path)
        except ExtractError as exc:
            logger.warning("skipping %s: %s", row.utterance_id, exc)
            continue
        frames = np.asarray(encoder(waveform), dtype=np.float64)
        if frames.ndim != 2 or frames.shape[0] == 0:
            logger.warning("skipping %s: encoder returned shape %s",
                           row.utterance_id, frames.shape)
            continue
        pooled = frames.mean(axis=0)
        if dim is None:
            dim = pooled.shape[0]
        elif pooled.shape[0] != dim:
            raise ExtractError(
                f"{row.utterance_id}: embedding dim {pooled.shape[0]} != {dim}")
        records.append((row.utterance_id, row.speaker_id, row.dataset_id,
                        row.emotion_label, pooled))
    if not records:
        raise ExtractError("no embeddings extracted")
    names = [f"emb.{j}" for j in range(dim)]
    write_feature_table(out_path, names, records)
    logger.info("wrote %d x %d embedding table to %s", len(records), dim, out_path)
    return len(records)
