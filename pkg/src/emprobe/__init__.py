"""emprobe: explain what interpretable acoustic information an audio
embedding uses for speech emotion recognition.

The pipeline classifies each emotion against neutral with both an
interpretable acoustic feature set and a black-box embedding, ranks the
embedding dimensions by exact SHAP importance, finds the smallest top-k
prefix that classifies best, and then probes acoustic features from all
vs. top dimensions to score each feature's information increase.
"""

__version__ = "0.1.0"

from emprobe.errors import (ConvergenceError, EmprobeError,  # noqa: F401
                            SingularSystemError, ValidationError)
