"""Command-line front end: build datasets, evaluate theory, train networks,
compare both, estimate rank probabilities, and reproduce preset bundles."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .architectures import Architecture
from .datasets import (DatasetParams, ParameterError, build_dataset,
                       read_keyvalues, save_dataset)
from .experiments import (ExperimentConfig, _write_csv, list_presets, run,
                          run_preset)
from .networks import LearningRule
from .theory import (ConsistencyError, TrajectoryConfig, predicted_mode_curves,
                     predicted_norms)


def _params_from_args(args) -> DatasetParams:
    return DatasetParams(n_x=args.nx, n_y=args.ny, k_x=args.kx, k_y=args.ky, r=args.r)


def _arch_from_args(args, params: DatasetParams) -> Architecture:
    name = args.arch.replace("_", "-")
    if name == "dense":
        return Architecture.dense()
    if name == "shallow":
        return Architecture.shallow()
    if name == "output-partitioned":
        return Architecture.output_partitioned()
    if name == "fully-partitioned":
        return Architecture.fully_partitioned()
    if name == "imperfect":
        if args.ky_left is None:
            raise ParameterError("--arch imperfect needs --ky-left")
        return Architecture.imperfect_partition(args.ky_left, params.k_y - args.ky_left)
    raise ParameterError(f"unknown architecture {args.arch!r}")


def _add_params_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nx", type=int, required=True, help="compositional input bits")
    p.add_argument("--ny", type=int, required=True, help="compositional output features")
    p.add_argument("--kx", type=int, default=0, help="input identity blocks")
    p.add_argument("--ky", type=int, default=0, help="output identity blocks")
    p.add_argument("--r", type=float, default=1.0, help="identity block scale")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--arch", default="dense",
                   help="dense | shallow | output-partitioned | fully-partitioned | imperfect")
    p.add_argument("--ky-left", type=int, default=None,
                   help="output identity blocks grouped with the compositional module")
    p.add_argument("--depth", default="deep", choices=["deep", "shallow"])
    p.add_argument("--rule", default="gd",
                   help="gd | anti-hebbian | contrastive-hebbian | hebbian | quasi-predictive-coding")
    p.add_argument("--epochs", type=int, default=5000)
    p.add_argument("--lr", type=float, default=0.002)
    p.add_argument("--init-std", type=float, default=1e-3)
    p.add_argument("--hidden", type=int, default=None, help="hidden width (default: minimal)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--n-train", type=int, default=None, help="training columns (rest is test)")


def _config_from_args(args) -> ExperimentConfig:
    params = _params_from_args(args)
    return ExperimentConfig(
        params=params, arch=_arch_from_args(args, params), depth=args.depth,
        rule=LearningRule.from_name(args.rule), epochs=args.epochs,
        learning_rate=args.lr, init_std=args.init_std, hidden_width=args.hidden,
        record_every=args.record_every, repeats=args.repeats, base_seed=args.seed,
        n_train=args.n_train, feature_choice=args.feature_choice)


def cmd_gen_dataset(args) -> int:
    d = build_dataset(_params_from_args(args), feature_choice=args.feature_choice,
                      seed=args.seed)
    save_dataset(d, args.out)
    print(f"dataset written to {args.out}")
    return 0


def cmd_theory(args) -> int:
    params = _params_from_args(args)
    arch = _arch_from_args(args, params)
    times = np.arange(0, args.epochs + 1, args.record_every, dtype=float)
    cfg = TrajectoryConfig(pi0=args.pi0, epsilon=args.lr, n_x=params.n_x)
    curves = {}
    if arch.variant in ("dense", "shallow"):
        depth = "shallow" if arch.variant == "shallow" else args.depth
        for mode_id, c in predicted_mode_curves(params, cfg, times, depth=depth).items():
            curves[f"mode_{mode_id}"] = c
    curves.update(predicted_norms(params, arch, cfg, times, depth=args.depth).as_dict())
    rows = [(t, cid, curve[i]) for cid, curve in sorted(curves.items())
            for i, t in enumerate(times)]
    _write_csv(Path(args.out), ["t", "mode_or_norm_id", "predicted_value"], rows)
    print(f"theory curves written to {args.out}")
    return 0


def cmd_train(args) -> int:
    config = _config_from_args(args)
    out = run(config, out_dir=args.out)
    print(f"experiment bundle written to {out}")
    return 0


def cmd_compare(args) -> int:
    # identical bundle, plus a summary of the worst deviation on stdout
    config = _config_from_args(args)
    out = run(config, out_dir=args.out)
    dev_file = Path(out) / f"deviation_{config.name}.txt"
    if dev_file.exists():
        print(dev_file.read_text().rstrip())
    else:
        print("split training has no closed-form reference; history written only")
    return 0


def cmd_rank(args) -> int:
    from .rank import RankTrial, enumerate_full_rank_probability, estimate_full_rank_probability
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else \
        list(range(1, 2 ** args.n_features + 1))
    rows = []
    for size in sizes:
        est = estimate_full_rank_probability(
            RankTrial(n_features=args.n_features, sample_size=size,
                      trials=args.trials, seed=args.seed * 1000 + size))
        exact = enumerate_full_rank_probability(args.n_features, size) \
            if args.exact else float("nan")
        rows.append((args.n_features, size, est.estimate, est.std_error, exact))
    _write_csv(Path(args.out), ["n_features", "sample_size", "estimate",
                                "std_error", "exact"], rows)
    print(f"rank table written to {args.out}")
    return 0


def cmd_reproduce(args) -> int:
    if args.list:
        for name, description in list_presets():
            print(f"{name}: {description}")
        return 0
    if not args.preset:
        raise ParameterError("--preset NAME required (or --list)")
    overrides = {}
    for key in ("epochs", "lr", "repeats", "rule"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.arch is not None:
        params = None  # imperfect override not supported at preset level
        overrides["arch"] = {
            "dense": Architecture.dense(), "shallow": Architecture.shallow(),
            "output-partitioned": Architecture.output_partitioned(),
            "fully-partitioned": Architecture.fully_partitioned(),
        }.get(args.arch.replace("_", "-"))
        if overrides["arch"] is None:
            raise ParameterError(f"cannot override preset architecture with {args.arch!r}")
    out = run_preset(args.preset, args.out, seed=args.seed, overrides=overrides,
                     workers=args.workers)
    print(f"preset {args.preset!r} written to {out}")
    return 0


def _apply_config_file(argv: list[str]) -> list[str]:
    """Prepend options from --config FILE; explicit flags override them."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    injected = []
    for key, value in read_keyvalues(Path(path)).items():
        flag = "--" + key.replace("_", "-")
        if flag in rest:
            continue
        if value.lower() == "true":
            injected.append(flag)
        elif value.lower() != "false":
            injected.extend([flag, value])
    # subcommand stays first
    return rest[:1] + injected + rest[1:]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modspec",
        description="Compositional datasets, exact linear-network dynamics, and "
                    "module-specialization experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="build a dataset and write it as CSV")
    _add_params_options(p)
    p.add_argument("--feature-choice", default="first", choices=["first", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("theory", help="evaluate predicted trajectories and norms")
    _add_params_options(p)
    p.add_argument("--arch", default="dense")
    p.add_argument("--ky-left", type=int, default=None)
    p.add_argument("--depth", default="deep", choices=["deep", "shallow"])
    p.add_argument("--epochs", type=int, default=5000)
    p.add_argument("--lr", type=float, default=0.002)
    p.add_argument("--pi0", type=float, default=1e-6)
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_theory)

    for name, fn, help_text in (
            ("train", cmd_train, "train a network and write the experiment bundle"),
            ("compare", cmd_compare, "train, predict, and report deviations")):
        p = sub.add_parser(name, help=help_text)
        _add_params_options(p)
        p.add_argument("--feature-choice", default="first", choices=["first", "random"])
        _add_run_options(p)
        p.add_argument("--out", required=True)
        p.set_defaults(func=fn)

    p = sub.add_parser("rank", help="full-rank sampling probabilities")
    p.add_argument("--n-features", type=int, required=True)
    p.add_argument("--sizes", default=None, help="comma-separated sample sizes")
    p.add_argument("--trials", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exact", action="store_true", help="add the enumeration column")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("reproduce", help="rebuild a preset bundle")
    p.add_argument("--preset", default=None)
    p.add_argument("--list", action="store_true", help="list preset names")
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--arch", default=None)
    p.add_argument("--rule", default=None)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config_file(argv)
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (ParameterError, ConsistencyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
