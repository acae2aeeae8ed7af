"""Experiment orchestration: configured runs, paper-figure presets, and CSV
bundles with a manifest.

A bundle directory holds the dataset, one history/theory/deviation trio per
run (averaged over repeats where configured), and manifest.csv listing every
artifact with its schema.  Identical configuration and seed reproduce every
byte.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .architectures import Architecture
from .datasets import (Dataset, DatasetParams, ParameterError, build_dataset,
                       save_dataset, split, write_keyvalues)
from .metrics import deviation
from .networks import (LearningRule, TrainConfig, TrainingHistory, init_network,
                       train)
from .rank import RankTrial, enumerate_full_rank_probability, estimate_full_rank_probability
from .theory import (TrajectoryConfig, _group_trajectories, analytic_svd,
                     architecture_frames, predicted_mode_curves, predicted_norms)

NORM_NAMES = ("norm_comp_comp", "norm_noncomp_comp",
              "norm_comp_noncomp", "norm_noncomp_noncomp")


@dataclass(frozen=True)
class ExperimentConfig:
    """One configured training run (possibly repeated over seeds)."""

    params: DatasetParams
    arch: Architecture
    depth: str = "deep"
    rule: LearningRule = LearningRule.gradient_descent()
    epochs: int = 5000
    learning_rate: float = 0.002
    init_std: float = 1e-3
    hidden_width: int | None = None
    record_every: int = 1
    repeats: int = 1
    base_seed: int = 0
    n_train: int | None = None
    feature_choice: str = "first"
    name: str = "run"
    out_dir: str | None = None

    def __post_init__(self):
        if self.repeats < 1:
            raise ParameterError("repeats: must be at least 1")
        if self.depth not in ("deep", "shallow"):
            raise ParameterError(f"depth: must be 'deep' or 'shallow', got {self.depth!r}")
        if self.epochs < 0:
            raise ParameterError("epochs: must be nonnegative")
        if not self.learning_rate >= 0:
            raise ParameterError("learning_rate: must be nonnegative")
        self.arch.validate_for(self.params)
        if self.n_train is not None and not 1 <= self.n_train <= self.params.n_examples:
            raise ParameterError(f"n_train: must be in [1, {self.params.n_examples}]")


@dataclass
class RunResult:
    config: ExperimentConfig
    histories: list[TrainingHistory]

    @property
    def first(self) -> TrainingHistory:
        return self.histories[0]


def execute_run(config: ExperimentConfig, dataset: Dataset,
                workers: int = 1) -> RunResult:
    """Train ``config.repeats`` networks, seeds base_seed .. base_seed+R-1."""
    svd = analytic_svd(dataset)
    frames = architecture_frames(dataset, config.arch)

    def one(rep: int) -> TrainingHistory:
        seed = config.base_seed + rep
        cfg = TrainConfig(epsilon=config.learning_rate, epochs=config.epochs,
                          init_std=config.init_std, seed=seed,
                          record_every=config.record_every)
        net = init_network(dataset, config.arch, config.depth, cfg,
                           hidden_width=config.hidden_width)
        cols_train = cols_test = None
        if config.n_train is not None:
            cols_train, cols_test = split(dataset, config.n_train, seed=seed)
        return train(net, dataset, config.rule, cfg, svd=svd,
                     train_columns=cols_train, test_columns=cols_test,
                     frames=frames)

    if workers > 1 and config.repeats > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            histories = list(pool.map(one, range(config.repeats)))
    else:
        histories = [one(rep) for rep in range(config.repeats)]
    return RunResult(config=config, histories=histories)


# --- CSV helpers ---------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and float matrix of a bundle CSV (non-numeric cells become nan)."""
    with open(path) as f:
        header = f.readline().strip().split(",")
        rows = []
        for line in f:
            line = line.strip()
            if not line:
                continue
            cells = []
            for cell in line.split(","):
                try:
                    cells.append(float(cell))
                except ValueError:
                    cells.append(float("nan"))
            rows.append(cells)
    return header, np.asarray(rows)


class BundleWriter:
    """Collects artifacts of one bundle and writes the manifest last."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.entries: list[tuple[str, str, str]] = []

    def add_csv(self, name: str, kind: str, header: Sequence[str], rows) -> None:
        _write_csv(self.out_dir / name, header, rows)
        self.entries.append((name, kind, ",".join(header)))

    def add_keyvalues(self, name: str, kind: str, items: dict) -> None:
        write_keyvalues(self.out_dir / name, items)
        self.entries.append((name, kind, "key = value"))

    def add_existing(self, name: str, kind: str, schema: str) -> None:
        self.entries.append((name, kind, schema))

    def finish(self) -> None:
        import csv as _csv
        with open(self.out_dir / "manifest.csv", "w", newline="") as f:
            w = _csv.writer(f)
            w.writerow(["artifact", "kind", "schema"])
            for entry in self.entries:
                w.writerow(entry)


def _history_table(result: RunResult) -> tuple[list[str], np.ndarray]:
    """Average the recorded curves over repeats; add std columns when R > 1."""
    hs = result.histories
    epochs = hs[0].epochs
    mode_ids = hs[0].mode_ids
    has_test = hs[0].test_losses is not None
    cols: list[tuple[str, np.ndarray]] = [("epoch", epochs.astype(float))]

    def add(name: str, stack: np.ndarray) -> None:
        cols.append((name, stack.mean(axis=0)))
        if len(hs) > 1:
            cols.append((name + "_std", stack.std(axis=0)))

    add("loss", np.vstack([h.losses for h in hs]))
    if has_test:
        add("test_loss", np.vstack([h.test_losses for h in hs]))
    for j, mode_id in enumerate(mode_ids):
        add(f"mode_{mode_id}", np.vstack([h.mode_values[:, j] for h in hs]))
    for j, name in enumerate(NORM_NAMES):
        add(name, np.vstack([h.norms[:, j] for h in hs]))
    header = [name for name, _ in cols]
    table = np.column_stack([series for _, series in cols])
    return header, table


def _theory_curves(config: ExperimentConfig, dataset: Dataset,
                   history: TrainingHistory) -> dict[str, np.ndarray]:
    """Predicted curves on the recorded epoch grid, using the initial mode
    strengths estimated from the run's own initialization."""
    times = history.epochs.astype(float)
    cfg = TrajectoryConfig(pi0=1e-6, epsilon=config.learning_rate, n_x=config.params.n_x)
    strengths = history.initial_strengths
    curves: dict[str, np.ndarray] = {}
    frames = architecture_frames(dataset, config.arch)
    if config.arch.variant in ("dense", "shallow"):
        dense_strengths = {mode_id: pi0s for (name, mode_id), pi0s in strengths.items()
                           if name == "dense"}
        for mode_id, curve in predicted_mode_curves(
                config.params, cfg, times, depth=config.depth,
                strengths=dense_strengths).items():
            curves[f"mode_{mode_id}"] = curve
    else:
        # per-module mode curves under namespaced ids
        for frame in frames:
            for mode_id, (lam, delta, _c, _u, _v) in frame.groups.items():
                pi0s = strengths.get((frame.name, mode_id))
                if pi0s is None or lam <= 0:
                    continue
                trajs = _group_trajectories(lam, delta, pi0s, config.learning_rate,
                                            config.params.n_x, times, config.depth)
                curves[f"mode_{frame.name}_{mode_id}"] = trajs.mean(axis=0)
    norms = predicted_norms(config.params, config.arch, cfg, times,
                            depth=config.depth, strengths=strengths, frames=frames)
    curves.update(norms.as_dict())
    return curves


def write_run_artifacts(writer: BundleWriter, result: RunResult, dataset: Dataset) -> None:
    name = result.config.name
    header, table = _history_table(result)
    writer.add_csv(f"history_{name}.csv", "history", header, table)
    if result.config.n_train is not None:
        return  # split training is not covered by the full-batch closed forms
    predicted = _theory_curves(result.config, dataset, result.first)
    times = result.first.epochs
    rows = [(float(t), cid, curve[i]) for cid, curve in sorted(predicted.items())
            for i, t in enumerate(times)]
    writer.add_csv(f"theory_{name}.csv", "theory",
                   ["t", "mode_or_norm_id", "predicted_value"], rows)
    sim = result.first.curves()
    report = deviation(times, sim, predicted)
    report.save(writer.out_dir / f"deviation_{name}.txt",
                writer.out_dir / f"deviation_{name}.csv")
    writer.add_existing(f"deviation_{name}.csv", "deviation",
                        "curve_id,max_abs_deviation,epoch_of_max")
    writer.add_existing(f"deviation_{name}.txt", "deviation-text", "key = value")


def _write_dataset_artifacts(writer: BundleWriter, dataset: Dataset) -> None:
    save_dataset(dataset, writer.out_dir)
    (writer.out_dir / "input.csv").rename(writer.out_dir / "dataset_input.csv")
    (writer.out_dir / "output.csv").rename(writer.out_dir / "dataset_output.csv")
    (writer.out_dir / "metadata.txt").rename(writer.out_dir / "dataset_metadata.txt")
    writer.add_existing("dataset_input.csv", "dataset-input", "rows=features,cols=examples")
    writer.add_existing("dataset_output.csv", "dataset-output", "rows=features,cols=examples")
    writer.add_existing("dataset_metadata.txt", "dataset-metadata", "key = value")


def _config_items(config: ExperimentConfig) -> dict:
    p = config.params
    arch = config.arch.variant
    if config.arch.k_y_left is not None:
        arch += f"({config.arch.k_y_left},{config.arch.k_y_right})"
    return {
        f"{config.name}.params": f"n_x={p.n_x} n_y={p.n_y} k_x={p.k_x} k_y={p.k_y} r={p.r!r}",
        f"{config.name}.arch": arch,
        f"{config.name}.depth": config.depth,
        f"{config.name}.rule": f"{config.rule.preset} gamma={config.rule.gamma!r} eta={config.rule.eta!r}",
        f"{config.name}.epochs": config.epochs,
        f"{config.name}.learning_rate": repr(config.learning_rate),
        f"{config.name}.init_std": repr(config.init_std),
        f"{config.name}.hidden_width": config.hidden_width,
        f"{config.name}.record_every": config.record_every,
        f"{config.name}.repeats": config.repeats,
        f"{config.name}.base_seed": config.base_seed,
        f"{config.name}.n_train": config.n_train,
    }


def run(config: ExperimentConfig, out_dir=None, workers: int = 1) -> Path:
    """Execute one configured experiment and write its bundle to disk."""
    out = Path(out_dir if out_dir is not None else config.out_dir or ".")
    writer = BundleWriter(out)
    dataset = build_dataset(config.params, feature_choice=config.feature_choice,
                            seed=config.base_seed)
    _write_dataset_artifacts(writer, dataset)
    result = execute_run(config, dataset, workers=workers)
    write_run_artifacts(writer, result, dataset)
    writer.add_keyvalues("config.txt", "config", _config_items(config))
    writer.finish()
    return out


# --- presets --------------------------------------------------------------------

FIG3_PARAMS = DatasetParams(n_x=3, n_y=1, k_x=3, k_y=1, r=1.0)


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    params: DatasetParams | None
    runs: tuple[ExperimentConfig, ...]
    rank_tables: bool = False


def _build_presets() -> dict[str, Preset]:
    fig3 = FIG3_PARAMS
    deep = ExperimentConfig(params=fig3, arch=Architecture.dense(), depth="deep",
                            epochs=7000, learning_rate=0.002, init_std=1e-3,
                            hidden_width=32, name="deep")
    shallow = replace(deep, arch=Architecture.shallow(), depth="shallow",
                      hidden_width=None, name="shallow")
    fig5_runs = (
        replace(deep, arch=Architecture.output_partitioned(), epochs=9000,
                record_every=5, name="output_partitioned"),
        replace(deep, arch=Architecture.fully_partitioned(), epochs=9000,
                record_every=5, name="fully_partitioned"),
    )
    gsweep_params = DatasetParams(n_x=3, n_y=1, k_x=3, k_y=2, r=1.0)
    gsweep = tuple(
        ExperimentConfig(params=gsweep_params,
                         arch=Architecture.imperfect_partition(kl, gsweep_params.k_y - kl),
                         depth="deep", epochs=9000, learning_rate=0.002,
                         init_std=1e-3, hidden_width=32, record_every=5,
                         name=f"imperfect_{kl}_{gsweep_params.k_y - kl}")
        for kl in range(gsweep_params.k_y + 1))
    rules = (("gd", LearningRule.gradient_descent()),
             ("anti_hebbian", LearningRule.anti_hebbian()),
             ("contrastive_hebbian", LearningRule.contrastive_hebbian()),
             ("hebbian", LearningRule.hebbian()),
             ("quasi_predictive_coding", LearningRule.quasi_predictive_coding()))
    hruns = tuple(replace(deep, rule=rule, epochs=12000, record_every=5, name=name)
                  for name, rule in rules)

    def appendix_a(tag: str, params: DatasetParams, description: str) -> Preset:
        cfg = ExperimentConfig(params=params, arch=Architecture.dense(), depth="deep",
                               epochs=2000, learning_rate=0.02, init_std=1e-3,
                               hidden_width=50, record_every=10, repeats=50,
                               n_train=3, name="dense")
        return Preset(name=f"appendixA-{tag}", description=description,
                      params=params, runs=(cfg,))

    presets = {
        "fig3": Preset(
            name="fig3",
            description="Deep and shallow dense runs on the (3,3,1,1,1) dataset: "
                        "singular-value and partitioned-norm trajectories vs theory.",
            params=fig3, runs=(deep, shallow)),
        "fig5-split": Preset(
            name="fig5-split",
            description="Output-partitioned and fully partitioned runs on the "
                        "(3,3,1,1,1) dataset.",
            params=fig3, runs=fig5_runs),
        "appendixA-A": appendix_a(
            "A", DatasetParams(3, 2, 0, 0, 0.0),
            "Purely compositional dataset, 3:5 split, 50 repeats: generalizes "
            "once the training sample spans the compositional space."),
        "appendixA-B": appendix_a(
            "B", DatasetParams(3, 0, 1, 1, 2.0),
            "Identity-only outputs (nearest in-family point to the original "
            "pattern-free dataset), 3:5 split: test loss does not decrease."),
        "appendixA-C": appendix_a(
            "C", DatasetParams(3, 2, 1, 1, 2.0),
            "Mixed dataset, 3:5 split: full-rank identity structure blocks "
            "generalization of the whole mapping."),
        "appendixA-D": appendix_a(
            "D", DatasetParams(3, 0, 1, 1, 2.0),
            "Compositional inputs but identity-only outputs, 3:5 split: no "
            "generalization."),
        "appendixA-E": appendix_a(
            "E", DatasetParams(3, 2, 1, 0, 2.0),
            "Identity blocks on the input side only, 3:5 split: the network "
            "leans on them and does not generalize."),
        "appendixG-sweep": Preset(
            name="appendixG-sweep",
            description="Imperfect output partitions on a k_y=2 dataset: "
                        "k_y_left from 0 (clean split) to k_y (dense behaviour).",
            params=gsweep_params, runs=gsweep),
        "appendixH": Preset(
            name="appendixH",
            description="The four alternative learning rules against gradient "
                        "descent on the fig3 dataset.",
            params=fig3, runs=hruns),
        "rank-tables": Preset(
            name="rank-tables",
            description="Monte-Carlo and exact full-rank sampling probabilities "
                        "for 3 and 4 compositional features.",
            params=None, runs=(), rank_tables=True),
    }
    return presets


_PRESETS = _build_presets()


def list_presets() -> list[tuple[str, str]]:
    return [(p.name, p.description) for p in _PRESETS.values()]


def write_rank_tables(writer: BundleWriter, trials: int = 5000, seed: int = 0) -> None:
    rows = []
    for n in (3, 4):
        for size in range(1, 2 ** n + 1):
            est = estimate_full_rank_probability(
                RankTrial(n_features=n, sample_size=size, trials=trials,
                          seed=seed * 1000 + n * 100 + size))
            exact = enumerate_full_rank_probability(n, size)
            rows.append((n, size, est.estimate, est.std_error, exact))
    writer.add_csv("rank_tables.csv", "rank-table",
                   ["n_features", "sample_size", "estimate", "std_error", "exact"],
                   rows)


def run_preset(name: str, out_dir, seed: int | None = None,
               overrides: dict | None = None, workers: int = 1) -> Path:
    """Reproduce one preset into ``out_dir``.

    ``overrides`` may set epochs, lr, repeats, arch, rule for every run of the
    preset; ``seed`` replaces the base seed.
    """
    if name not in _PRESETS:
        raise ParameterError(f"unknown preset {name!r}; available: {sorted(_PRESETS)}")
    preset = _PRESETS[name]
    writer = BundleWriter(out_dir)
    items: dict = {"preset": preset.name, "description": preset.description}
    if preset.rank_tables:
        write_rank_tables(writer, seed=seed or 0)
        items["seed"] = seed or 0
        writer.add_keyvalues("config.txt", "config", items)
        writer.finish()
        return Path(out_dir)

    dataset = build_dataset(preset.params, seed=seed or 0)
    _write_dataset_artifacts(writer, dataset)
    overrides = dict(overrides or {})
    for config in preset.runs:
        updates = {}
        if seed is not None:
            updates["base_seed"] = seed
        if "epochs" in overrides:
            updates["epochs"] = int(overrides["epochs"])
        if "lr" in overrides:
            updates["learning_rate"] = float(overrides["lr"])
        if "repeats" in overrides:
            updates["repeats"] = int(overrides["repeats"])
        if "arch" in overrides:
            updates["arch"] = overrides["arch"]
        if "rule" in overrides:
            updates["rule"] = (overrides["rule"]
                               if isinstance(overrides["rule"], LearningRule)
                               else LearningRule.from_name(overrides["rule"]))
        config = replace(config, **updates) if updates else config
        result = execute_run(config, dataset, workers=workers)
        write_run_artifacts(writer, result, dataset)
        items.update(_config_items(config))
    writer.add_keyvalues("config.txt", "config", items)
    writer.finish()
    return Path(out_dir)
