import filecmp
from pathlib import Path

import numpy as np
import pytest

from modspec import (Architecture, DatasetParams, ExperimentConfig,
                     LearningRule, ParameterError, list_presets, run,
                     run_preset)
from modspec.experiments import read_csv

REQUIRED_PRESETS = {"fig3", "fig5-split", "appendixA-A", "appendixA-B",
                    "appendixA-C", "appendixA-D", "appendixA-E",
                    "appendixG-sweep", "appendixH", "rank-tables"}


def test_list_presets_contains_required_names():
    names = {name for name, _ in list_presets()}
    assert REQUIRED_PRESETS <= names
    for _, description in list_presets():
        assert description


def test_every_preset_round_trips(tmp_path):
    # smoke contract: every preset runs without config errors (shortened)
    for name, _ in list_presets():
        out = run_preset(name, tmp_path / name, seed=0,
                         overrides={"epochs": 40, "repeats": 2})
        assert (out / "manifest.csv").exists()
        assert (out / "config.txt").exists()


def test_run_writes_bundle(tmp_path):
    config = ExperimentConfig(
        params=DatasetParams(n_x=2, n_y=1, k_x=1, k_y=1, r=1.0),
        arch=Architecture.dense(), epochs=60, learning_rate=0.01,
        record_every=10, name="demo")
    out = run(config, out_dir=tmp_path / "demo")
    for artifact in ("dataset_input.csv", "dataset_output.csv", "dataset_metadata.txt",
                     "history_demo.csv", "theory_demo.csv", "deviation_demo.csv",
                     "deviation_demo.txt", "config.txt", "manifest.csv"):
        assert (out / artifact).exists(), artifact


def test_history_schema_and_grid(tmp_path):
    config = ExperimentConfig(
        params=DatasetParams(n_x=2, n_y=1, k_x=1, k_y=1, r=1.0),
        arch=Architecture.dense(), epochs=50, learning_rate=0.01,
        record_every=10, name="demo")
    out = run(config, out_dir=tmp_path)
    header, table = read_csv(out / "history_demo.csv")
    assert header[:2] == ["epoch", "loss"]
    assert "norm_comp_comp" in header and "mode_1" in header
    assert table[0, 0] == 0.0 and table[-1, 0] == 50.0
    h2, t2 = read_csv(out / "theory_demo.csv")
    assert h2 == ["t", "mode_or_norm_id", "predicted_value"]


def test_repeats_average_and_std_columns(tmp_path):
    config = ExperimentConfig(
        params=DatasetParams(n_x=2, n_y=1, k_x=1, k_y=1, r=1.0),
        arch=Architecture.dense(), epochs=30, learning_rate=0.01,
        record_every=10, repeats=3, name="avg")
    out = run(config, out_dir=tmp_path)
    header, _ = read_csv(out / "history_avg.csv")
    assert "loss_std" in header and "norm_comp_comp_std" in header


def test_split_run_records_test_loss(tmp_path):
    config = ExperimentConfig(
        params=DatasetParams(n_x=3, n_y=2, k_x=0, k_y=0, r=0.0),
        arch=Architecture.dense(), epochs=50, learning_rate=0.02,
        record_every=10, n_train=3, hidden_width=16, name="sp")
    out = run(config, out_dir=tmp_path)
    header, _ = read_csv(out / "history_sp.csv")
    assert "test_loss" in header
    assert not (out / "theory_sp.csv").exists()


def test_manifest_lists_all_csv_artifacts(tmp_path):
    out = run_preset("fig3", tmp_path, seed=0, overrides={"epochs": 30})
    manifest = (out / "manifest.csv").read_text().splitlines()
    listed = {line.split(",")[0] for line in manifest[1:]}
    on_disk = {p.name for p in out.iterdir()} - {"manifest.csv"}
    assert listed == on_disk


def test_byte_identical_rerun(tmp_path):
    a = run_preset("fig3", tmp_path / "a", seed=3, overrides={"epochs": 60})
    b = run_preset("fig3", tmp_path / "b", seed=3, overrides={"epochs": 60})
    for f in sorted(p.name for p in a.iterdir()):
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_different_seed_changes_history(tmp_path):
    a = run_preset("fig3", tmp_path / "a", seed=0, overrides={"epochs": 60})
    b = run_preset("fig3", tmp_path / "b", seed=4, overrides={"epochs": 60})
    assert (a / "history_deep.csv").read_bytes() != (b / "history_deep.csv").read_bytes()


def test_unknown_preset_rejected(tmp_path):
    with pytest.raises(ParameterError):
        run_preset("fig99", tmp_path)


def test_config_validation_messages():
    with pytest.raises(ParameterError, match="repeats"):
        ExperimentConfig(params=DatasetParams(2, 1, 0, 0, 1.0),
                         arch=Architecture.dense(), repeats=0)
    with pytest.raises(ParameterError, match="n_train"):
        ExperimentConfig(params=DatasetParams(2, 1, 0, 0, 1.0),
                         arch=Architecture.dense(), n_train=9)


def test_rank_tables_bundle(tmp_path):
    out = run_preset("rank-tables", tmp_path, seed=0)
    header, table = read_csv(out / "rank_tables.csv")
    assert header == ["n_features", "sample_size", "estimate", "std_error", "exact"]
    rows3 = table[table[:, 0] == 3]
    assert len(rows3) == 8
    np.testing.assert_allclose(rows3[rows3[:, 1] == 3][0, 4], 32.0 / 56.0, atol=1e-12)


def test_workers_do_not_change_results(tmp_path):
    a = run_preset("appendixA-A", tmp_path / "a", seed=1,
                   overrides={"epochs": 40, "repeats": 4})
    b = run_preset("appendixA-A", tmp_path / "b", seed=1,
                   overrides={"epochs": 40, "repeats": 4}, workers=4)
    assert (a / "history_dense.csv").read_bytes() == (b / "history_dense.csv").read_bytes()
