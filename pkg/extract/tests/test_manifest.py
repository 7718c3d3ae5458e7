import pytest

from emprobe_extract import ExtractError
from emprobe_extract.manifest import (build_manifest, load_manifest,
                                      save_manifest)

from conftest import write_wav


class TestRavdess:
    def test_filename_convention(self, ravdess_tree):
        rows = build_manifest(ravdess_tree, "ravdess")
        by_id = {r.utterance_id: r for r in rows}
        anger = by_id["03-01-05-01-01-01-12"]
        assert anger.emotion_label == "anger"
        assert anger.speaker_id == "Actor_12"
        assert anger.dataset_id == "ravdess"
        assert anger.audio_path.exists()

    def test_vocabulary_mapping(self, ravdess_tree):
        labels = {r.emotion_label for r in build_manifest(ravdess_tree, "ravdess")}
        assert labels == {"neutral", "joy", "sadness", "anger"}

    def test_song_channel_skipped(self, ravdess_tree):
        rows = build_manifest(ravdess_tree, "ravdess")
        assert len(rows) == 8  # 2 actors x 4 emotions; the song file is skipped
        assert all("03-02" not in r.utterance_id for r in rows)

    def test_unparseable_skipped(self, ravdess_tree, caplog):
        write_wav(ravdess_tree / "Actor_01" / "notes.wav")
        with caplog.at_level("WARNING"):
            rows = build_manifest(ravdess_tree, "ravdess")
        assert len(rows) == 8
        assert "notes.wav" in caplog.text

    def test_empty_directory(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(ExtractError, match="no audio files"):
            build_manifest(tmp_path / "empty", "ravdess")


class TestSavee:
    def test_flat_layout(self, savee_flat_tree):
        rows = build_manifest(savee_flat_tree, "savee")
        by_id = {r.utterance_id: r for r in rows}
        assert by_id["DC_a01"].speaker_id == "DC"
        assert by_id["DC_a01"].emotion_label == "anger"
        assert by_id["JE_sa01"].emotion_label == "sadness"
        assert by_id["JE_su02"].emotion_label == "surprise"
        assert by_id["DC_h03"].emotion_label == "joy"

    def test_nested_layout(self, savee_nested_tree):
        rows = build_manifest(savee_nested_tree, "savee")
        speakers = {r.speaker_id for r in rows}
        assert speakers == {"DC", "JK"}
        # same stems exist for both speakers: ids must still be unique
        ids = [r.utterance_id for r in rows]
        assert len(set(ids)) == len(ids)

    def test_unknown_dataset(self, savee_flat_tree):
        with pytest.raises(ExtractError, match="dataset_id"):
            build_manifest(savee_flat_tree, "iemocap")


class TestManifestIO:
    def test_round_trip(self, ravdess_tree, tmp_path):
        rows = build_manifest(ravdess_tree, "ravdess")
        path = tmp_path / "manifest.csv"
        save_manifest(rows, path)
        again = load_manifest(path)
        assert [(r.utterance_id, r.speaker_id, r.emotion_label) for r in rows] \
            == [(r.utterance_id, r.speaker_id, r.emotion_label) for r in again]

    def test_load_rejects_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ExtractError, match="header"):
            load_manifest(path)

    def test_load_rejects_duplicates(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("utterance_id,speaker_id,dataset_id,emotion_label,audio_path\n"
                        "u1,s,d,e,/tmp/a.wav\nu1,s,d,e,/tmp/b.wav\n")
        with pytest.raises(ExtractError, match="duplicate"):
            load_manifest(path)
