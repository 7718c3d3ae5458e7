"""Integration with the analysis pipeline through its external interface:
the emitted CSVs must pass `emprobe validate` with zero issues."""

import shutil
import subprocess

import pytest

from emprobe_extract.acoustic import extract_acoustic, write_category_map
from emprobe_extract.embeddings import extract_embeddings
from emprobe_extract.manifest import build_manifest

from conftest import stub_encoder, stub_functionals

emprobe_cli = shutil.which("emprobe")
needs_emprobe = pytest.mark.skipif(emprobe_cli is None,
                                   reason="emprobe CLI not installed")


@needs_emprobe
def test_extracted_tables_validate_cleanly(ravdess_tree, tmp_path):
    rows = build_manifest(ravdess_tree, "ravdess")
    emb = tmp_path / "embeddings.csv"
    ac = tmp_path / "acoustic.csv"
    cmap = tmp_path / "category_map.csv"
    extract_embeddings(rows, emb, encoder=stub_encoder)
    extract_acoustic(rows, ac, extractor=stub_functionals)
    write_category_map(cmap)

    proc = subprocess.run(
        [emprobe_cli, "validate", "--embeddings", str(emb), "--acoustic",
         str(ac), "--category-map", str(cmap), "--emotions", "anger,joy"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "0 issues" in proc.stdout


@needs_emprobe
def test_identical_utterance_sets(ravdess_tree, tmp_path):
    rows = build_manifest(ravdess_tree, "ravdess")
    emb = tmp_path / "embeddings.csv"
    ac = tmp_path / "acoustic.csv"
    extract_embeddings(rows, emb, encoder=stub_encoder)
    extract_acoustic(rows, ac, extractor=stub_functionals)
    ids_emb = {line.split(",")[0] for line in emb.read_text().splitlines()[1:]}
    ids_ac = {line.split(",")[0] for line in ac.read_text().splitlines()[1:]}
    assert ids_emb == ids_ac
