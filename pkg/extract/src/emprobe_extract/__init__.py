"""emprobe-extract: builds the canonical feature-table CSVs that the
emprobe analysis pipeline consumes, from raw emotional speech datasets.

Three stages: dataset manifests (RAVDESS, SAVEE filename conventions with a
shared emotion vocabulary), mean-pooled deep embeddings (WavLM Large by
default), and eGeMAPSv02 acoustic functionals (via openSMILE).
"""

__version__ = "0.1.0"


class ExtractError(Exception):
    """Raised for malformed datasets, manifests or extraction failures."""
