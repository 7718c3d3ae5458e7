"""PCM WAV loading and resampling to the 16 kHz mono float32 that speech
models expect. Stdlib wave + polyphase resampling keeps the dependency
footprint to numpy/scipy."""

from __future__ import annotations

import math
import wave
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

from emprobe_extract import ExtractError

TARGET_RATE = 16_000

_PCM_SCALE = {1: 128.0, 2: 32768.0, 4: 2147483648.0}
_PCM_DTYPE = {1: np.uint8, 2: np.int16, 4: np.int32}


def load_waveform(path: str | Path, target_rate: int = TARGET_RATE) -> np.ndarray:
    """Read a PCM WAV as mono float32 in [-1, 1], resampled to target_rate.

    Raises ExtractError for unreadable files and zero-length audio.
    """
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wav:
            n_channels = wav.getnchannels()
            width = wav.getsampwidth()
            rate = wav.getframerate()
            n_frames = wav.getnframes()
            raw = wav.readframes(n_frames)
    except (wave.Error, OSError, EOFError) as exc:
        raise ExtractError(f"{path}: unreadable audio ({exc})") from None
    if width not in _PCM_DTYPE:
        raise ExtractError(f"{path}: unsupported sample width {width}")
    data = np.frombuffer(raw, dtype=_PCM_DTYPE[width]).astype(np.float64)
    if width == 1:  # 8-bit WAV is unsigned
        data -= 128.0
    if n_channels > 1:
        data = data.reshape(-1, n_channels).mean(axis=1)
    if data.size == 0:
        raise ExtractError(f"{path}: zero-length audio")
    data /= _PCM_SCALE[width]
    if rate != target_rate:
        g = math.gcd(rate, target_rate)
        data = resample_poly(data, target_rate // g, rate // g)
    return data.astype(np.float32)
