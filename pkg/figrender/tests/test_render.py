"""Renderer tests, including the secondary acceptance criterion: a valid
image for every preset bundle, clean failure on truncated bundles."""

import shutil
from pathlib import Path

import pytest

from figrender import FigureError, FigureSpec, load_bundle, render
from figrender.cli import main
from modspec.experiments import list_presets, run_preset

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

TRAJECTORY_PRESETS = {"fig3", "fig5-split", "appendixG-sweep", "appendixH"}
SPLIT_PRESETS = {"appendixA-A", "appendixA-B", "appendixA-C",
                 "appendixA-D", "appendixA-E"}


@pytest.fixture(scope="session")
def bundles(tmp_path_factory):
    root = tmp_path_factory.mktemp("bundles")
    paths = {}
    for name, _ in list_presets():
        paths[name] = run_preset(name, root / name, seed=0,
                                 overrides={"epochs": 120, "repeats": 2})
    return paths


def _kinds_for(name: str) -> list[str]:
    if name == "rank-tables":
        return ["rank-table"]
    if name in SPLIT_PRESETS:
        return ["loss-curves"]
    return ["mode-trajectories", "norm-trajectories", "loss-curves"]


def test_every_preset_bundle_renders(bundles, tmp_path):
    for name, bundle in bundles.items():
        for kind in _kinds_for(name):
            out = tmp_path / f"{name}_{kind}.png"
            result = render(FigureSpec(bundle=bundle, kind=kind, out=out))
            data = result.read_bytes()
            assert data[:8] == PNG_MAGIC, (name, kind)
            assert len(data) > 2000, (name, kind)


def test_overlay_requires_theory_curves(bundles, tmp_path):
    # split-training bundles carry no closed-form curves; overlay kinds must
    # refuse rather than draw a partial figure
    out = tmp_path / "a.png"
    with pytest.raises(FigureError, match="theory"):
        render(FigureSpec(bundle=bundles["appendixA-A"], kind="mode-trajectories",
                          out=out))
    assert not out.exists()


def test_svg_output(bundles, tmp_path):
    out = render(FigureSpec(bundle=bundles["fig3"], kind="norm-trajectories",
                            out=tmp_path / "norms.svg"))
    assert out.read_bytes().lstrip().startswith(b"<?xml")


def test_rerender_is_idempotent_and_read_only(bundles, tmp_path):
    bundle = bundles["fig3"]
    before = {p.name: p.read_bytes() for p in bundle.iterdir()}
    out = tmp_path / "fig.png"
    render(FigureSpec(bundle=bundle, kind="mode-trajectories", out=out))
    render(FigureSpec(bundle=bundle, kind="mode-trajectories", out=out))
    assert out.exists()
    after = {p.name: p.read_bytes() for p in bundle.iterdir()}
    assert before == after


def test_missing_artifact_fails_cleanly(bundles, tmp_path):
    broken = tmp_path / "broken"
    shutil.copytree(bundles["fig3"], broken)
    (broken / "theory_deep.csv").unlink()
    out = tmp_path / "fig.png"
    with pytest.raises(FigureError, match="missing artifacts"):
        render(FigureSpec(bundle=broken, kind="mode-trajectories", out=out))
    assert not out.exists()


def test_truncated_rows_fail_cleanly(bundles, tmp_path):
    broken = tmp_path / "truncated"
    shutil.copytree(bundles["fig3"], broken)
    history = broken / "history_deep.csv"
    lines = history.read_text().splitlines()
    lines[3] = lines[3].rsplit(",", 3)[0]  # cut the last cells of one row
    history.write_text("\n".join(lines) + "\n")
    out = tmp_path / "fig.png"
    with pytest.raises(FigureError, match="truncated"):
        render(FigureSpec(bundle=broken, kind="mode-trajectories", out=out))
    assert not out.exists()


def test_empty_history_fails_without_output(bundles, tmp_path):
    broken = tmp_path / "empty"
    shutil.copytree(bundles["fig3"], broken)
    history = broken / "history_deep.csv"
    history.write_text(history.read_text().splitlines()[0] + "\n")
    out = tmp_path / "fig.png"
    with pytest.raises(FigureError, match="no data rows"):
        render(FigureSpec(bundle=broken, kind="loss-curves", out=out))
    assert not out.exists()


def test_schema_drift_reported_by_name(bundles, tmp_path):
    broken = tmp_path / "drift"
    shutil.copytree(bundles["fig3"], broken)
    history = broken / "history_deep.csv"
    lines = history.read_text().splitlines()
    lines[0] = lines[0].replace("norm_comp_comp", "norm_cc")
    history.write_text("\n".join(lines) + "\n")
    with pytest.raises(FigureError, match="manifest schema"):
        render(FigureSpec(bundle=broken, kind="norm-trajectories",
                          out=tmp_path / "fig.png"))


def test_unknown_kind_rejected(bundles, tmp_path):
    with pytest.raises(FigureError, match="unknown figure kind"):
        FigureSpec(bundle=bundles["fig3"], kind="scatter", out=tmp_path / "x.png")


def test_cli_round_trip(bundles, tmp_path, capsys):
    out = tmp_path / "cli.png"
    assert main(["--bundle", str(bundles["rank-tables"]), "--kind", "rank-table",
                 "--out", str(out)]) == 0
    assert out.read_bytes()[:8] == PNG_MAGIC
    assert main(["--bundle", str(tmp_path / "nope"), "--kind", "rank-table",
                 "--out", str(tmp_path / "y.png")]) == 1
    assert "error:" in capsys.readouterr().err


def test_load_bundle_reports_manifest_problems(tmp_path):
    with pytest.raises(FigureError, match="manifest"):
        load_bundle(tmp_path)
