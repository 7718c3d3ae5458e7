import wave
from pathlib import Path

import numpy as np
import pytest


def write_wav(path, seconds=0.5, rate=48_000, freq=440.0, channels=1,
              amplitude=0.4):
    """Synthesize a PCM16 sine-tone WAV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    t = np.arange(int(seconds * rate)) / rate
    signal = (amplitude * np.sin(2 * np.pi * freq * t) * 32767).astype(np.int16)
    if channels > 1:
        signal = np.repeat(signal[:, None], channels, axis=1).ravel()
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(channels)
        wav.setsampwidth(2)
        wav.setframerate(rate)
        wav.writeframes(signal.tobytes())
    return path


@pytest.fixture
def ravdess_tree(tmp_path):
    """Two actors x four emotions of speech, plus one song file to skip."""
    root = tmp_path / "ravdess"
    for actor in ("01", "12"):
        for code in ("01", "03", "04", "05"):
            name = f"03-01-{code}-01-01-01-{actor}.wav"
            write_wav(root / f"Actor_{actor}" / name, seconds=0.3,
                      freq=200 + 50 * int(code))
    write_wav(root / "Actor_01" / "03-02-01-01-01-01-01.wav")  # song channel
    return root


@pytest.fixture
def savee_flat_tree(tmp_path):
    root = tmp_path / "savee"
    for spk in ("DC", "JE"):
        for stem in ("a01", "n01", "sa01", "su02", "h03"):
            write_wav(root / f"{spk}_{stem}.wav", seconds=0.25)
    return root


@pytest.fixture
def savee_nested_tree(tmp_path):
    root = tmp_path / "savee_nested" / "AudioData"
    for spk in ("DC", "JK"):
        for stem in ("a01", "f02", "n01"):
            write_wav(root / spk / f"{stem}.wav", seconds=0.25)
    return root.parent


def stub_encoder(waveform):
    """Deterministic frame features standing in for a speech model."""
    width = 400
    n = max(len(waveform) // width, 1)
    trimmed = (waveform[: n * width].reshape(n, width)
               if len(waveform) >= width else waveform[None, :])
    feats = np.stack([trimmed.mean(axis=1), trimmed.std(axis=1),
                      np.abs(trimmed).mean(axis=1), trimmed.max(axis=1)], axis=1)
    return np.tile(feats, (1, 4))  # 16 dims


def shipped_functional_names():
    from importlib import resources
    with resources.as_file(resources.files("emprobe_extract.data")
                           / "egemaps_v02_categories.csv") as path:
        lines = path.read_text().splitlines()[1:]
    prefix = "egemaps."
    return [line.split(",")[0][len(prefix):] for line in lines if line]


def stub_functionals(waveform):
    names = shipped_functional_names()
    base = np.linspace(0.0, 1.0, len(names))
    return names, base + float(np.mean(waveform)) + float(np.std(waveform))
