"""Render overlay figures from experiment bundles.

A bundle is a directory of CSV artifacts listed in manifest.csv.  Rendering
is read-only with respect to the bundle and writes nothing when validation
fails.  Predicted curves are drawn dashed, simulated curves solid, with
shaded bands where the bundle carries per-epoch standard deviations.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("mode-trajectories", "norm-trajectories", "loss-curves", "rank-table")


class FigureError(ValueError):
    """Raised when a bundle is missing, truncated, or lacks required data."""


@dataclass(frozen=True)
class FigureSpec:
    bundle: Path
    kind: str
    out: Path
    dpi: int = 150
    panel_size: tuple[float, float] = (4.5, 3.4)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")


@dataclass
class Table:
    header: list[str]
    rows: list[list[str]]

    def column(self, name: str) -> int:
        if name not in self.header:
            raise FigureError(f"missing column {name!r} (have {self.header})")
        return self.header.index(name)

    def floats(self, name: str) -> np.ndarray:
        j = self.column(name)
        try:
            return np.array([float(r[j]) for r in self.rows])
        except ValueError as exc:
            raise FigureError(f"non-numeric value in column {name!r}: {exc}") from None


@dataclass
class Bundle:
    root: Path
    entries: dict[str, tuple[str, str]]  # artifact -> (kind, schema)

    def artifacts(self, kind: str) -> list[str]:
        return sorted(name for name, (k, _) in self.entries.items() if k == kind)

    def load_table(self, name: str) -> Table:
        kind, schema = self.entries[name]
        path = self.root / name
        with open(path, newline="") as f:
            reader = csv.reader(f)
            try:
                header = next(reader)
            except StopIteration:
                raise FigureError(f"{name} is empty") from None
            if ",".join(header) != schema:
                raise FigureError(f"{name} header does not match its manifest schema "
                                  f"(expected {schema!r})")
            rows = []
            for i, row in enumerate(reader):
                if not row:
                    continue
                if len(row) != len(header):
                    raise FigureError(f"{name} row {i + 2} is truncated "
                                      f"({len(row)} of {len(header)} cells)")
                rows.append(row)
        if not rows:
            raise FigureError(f"{name} holds no data rows")
        return Table(header=header, rows=rows)


def load_bundle(path) -> Bundle:
    root = Path(path)
    manifest = root / "manifest.csv"
    if not manifest.exists():
        raise FigureError(f"no manifest.csv in {root}")
    entries: dict[str, tuple[str, str]] = {}
    with open(manifest, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["artifact", "kind", "schema"]:
            raise FigureError("manifest.csv header is not artifact,kind,schema")
        for row in reader:
            if len(row) != 3:
                raise FigureError(f"manifest row {row!r} is malformed")
            entries[row[0]] = (row[1], row[2])
    missing = [name for name in entries if not (root / name).exists()]
    if missing:
        raise FigureError(f"bundle is missing artifacts listed in the manifest: {missing}")
    return Bundle(root=root, entries=entries)


def _run_name(artifact: str, prefix: str) -> str:
    return artifact[len(prefix):-len(".csv")]


def _theory_series(bundle: Bundle, run: str) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    name = f"theory_{run}.csv"
    if name not in bundle.entries:
        raise FigureError(f"bundle has no predicted curves for run {run!r} "
                          "(overlay kinds need a theory artifact)")
    table = bundle.load_table(name)
    t = table.floats("t")
    values = table.floats("predicted_value")
    ids = [r[table.column("mode_or_norm_id")] for r in table.rows]
    out: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for cid in sorted(set(ids)):
        mask = np.array([i == cid for i in ids])
        order = np.argsort(t[mask], kind="stable")
        out[cid] = (t[mask][order], values[mask][order])
    return out


def _curve_columns(table: Table, prefix: str) -> list[str]:
    return [c for c in table.header
            if c.startswith(prefix) and not c.endswith("_std")]


def _draw_history(ax, table: Table, names: list[str], cmap) -> None:
    epochs = table.floats("epoch")
    for i, name in enumerate(names):
        color = cmap(i % 10)
        values = table.floats(name)
        ax.plot(epochs, values, "-", color=color, label=f"{name} (sim)", lw=1.6)
        std_name = name + "_std"
        if std_name in table.header:
            std = table.floats(std_name)
            ax.fill_between(epochs, values - std, values + std, color=color, alpha=0.2)


def _draw_theory(ax, series, names: list[str], cmap) -> None:
    for i, name in enumerate(names):
        if name in series:
            t, v = series[name]
            ax.plot(t, v, "--", color=cmap(i % 10), label=f"{name} (pred)", lw=1.4)


def _trajectory_figure(bundle: Bundle, prefix: str, ylabel: str, spec: FigureSpec):
    histories = bundle.artifacts("history")
    if not histories:
        raise FigureError("bundle holds no history artifacts")
    panels = []
    for artifact in histories:
        run = _run_name(artifact, "history_")
        table = bundle.load_table(artifact)
        names = _curve_columns(table, prefix)
        if not names:
            raise FigureError(f"{artifact} has no {prefix}* columns")
        series = _theory_series(bundle, run)
        panels.append((run, table, names, series))
    w, h = spec.panel_size
    fig, axes = plt.subplots(1, len(panels), figsize=(w * len(panels), h), squeeze=False)
    cmap = plt.get_cmap("tab10")
    for ax, (run, table, names, series) in zip(axes[0], panels):
        _draw_history(ax, table, names, cmap)
        _draw_theory(ax, series, names, cmap)
        ax.set_title(run)
        ax.set_xlabel("epoch")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=6)
    fig.tight_layout()
    return fig


def _loss_figure(bundle: Bundle, spec: FigureSpec):
    histories = bundle.artifacts("history")
    if not histories:
        raise FigureError("bundle holds no history artifacts")
    panels = []
    for artifact in histories:
        table = bundle.load_table(artifact)
        names = [c for c in ("loss", "test_loss") if c in table.header]
        panels.append((_run_name(artifact, "history_"), table, names))
    w, h = spec.panel_size
    fig, axes = plt.subplots(1, len(panels), figsize=(w * len(panels), h), squeeze=False)
    cmap = plt.get_cmap("tab10")
    for ax, (run, table, names) in zip(axes[0], panels):
        _draw_history(ax, table, names, cmap)
        ax.set_yscale("log")
        ax.set_title(run)
        ax.set_xlabel("epoch")
        ax.set_ylabel("loss")
        ax.legend(fontsize=6)
    fig.tight_layout()
    return fig


def _rank_figure(bundle: Bundle, spec: FigureSpec):
    tables = bundle.artifacts("rank-table")
    if not tables:
        raise FigureError("bundle holds no rank-table artifact")
    table = bundle.load_table(tables[0])
    n_feat = table.floats("n_features")
    panels = sorted(set(n_feat))
    w, h = spec.panel_size
    fig, axes = plt.subplots(1, len(panels), figsize=(w * len(panels), h), squeeze=False)
    for ax, n in zip(axes[0], panels):
        mask = n_feat == n
        sizes = table.floats("sample_size")[mask]
        est = table.floats("estimate")[mask]
        se = table.floats("std_error")[mask]
        exact = table.floats("exact")[mask]
        ax.bar(sizes, est, yerr=se, color="tab:blue", alpha=0.7, label="monte carlo")
        ax.plot(sizes, exact, "k_", markersize=12, label="enumeration")
        ax.set_title(f"{int(n)} compositional features")
        ax.set_xlabel("sample size")
        ax.set_ylabel("P(full rank)")
        ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> Path:
    """Validate the bundle, build the figure, and write the image.

    Nothing is written when validation fails.
    """
    bundle = load_bundle(spec.bundle)
    if spec.kind == "mode-trajectories":
        fig = _trajectory_figure(bundle, "mode_", "mode strength", spec)
    elif spec.kind == "norm-trajectories":
        fig = _trajectory_figure(bundle, "norm_", "Frobenius norm", spec)
    elif spec.kind == "loss-curves":
        fig = _loss_figure(bundle, spec)
    else:
        fig = _rank_figure(bundle, spec)
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=spec.dpi)
    plt.close(fig)
    return out
