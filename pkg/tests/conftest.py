import numpy as np
import pytest

from emprobe.dataio import FeatureTable, UtteranceRecord


def build_table(values, speakers, labels, feature_names, representation_id="test",
                dataset_id="ds"):
    """Assemble a FeatureTable from plain lists."""
    rows = []
    for i, (vals, spk, lab) in enumerate(zip(values, speakers, labels)):
        rows.append(UtteranceRecord(f"u{i}", spk, dataset_id, lab,
                                    np.asarray(vals, dtype=np.float64)))
    return FeatureTable.from_rows(rows, feature_names, representation_id)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_task_table(rng, n_speakers=10, per_speaker=8, d=4, informative=True):
    """Speaker-structured table with an 'emo' vs 'neutral' labeling.

    With informative=True the first column carries the class signal; otherwise
    labels are balanced coin flips independent of the features.
    """
    rows_vals, speakers, labels = [], [], []
    for s in range(n_speakers):
        lab_seq = np.array(["emo", "neutral"] * (per_speaker // 2)
                           + ["emo"] * (per_speaker % 2))
        rng.shuffle(lab_seq)
        for lab in lab_seq:
            x = rng.standard_normal(d)
            if informative:
                x[0] += 3.0 if lab == "emo" else -3.0
            rows_vals.append(x)
            speakers.append(f"spk{s}")
            labels.append(str(lab))
    names = [f"f.{j}" for j in range(d)]
    return build_table(rows_vals, speakers, labels, names)
