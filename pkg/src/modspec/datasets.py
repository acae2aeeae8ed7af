"""Parametric family of datasets mixing compositional and non-compositional structure.

A dataset is a pair of matrices with examples as columns.  The input stacks a
block of all sign patterns over ``n_x`` bits (the compositional features) on
top of ``k_x`` copies of a scaled identity (one private feature per example).
The output stacks ``n_y`` rows copied from distinct compositional input rows
on top of ``k_y`` scaled identity blocks.  The total number of examples is
always ``P = 2**n_x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class ParameterError(ValueError):
    """Raised when dataset or configuration parameters are invalid."""


@dataclass(frozen=True)
class DatasetParams:
    """The five numbers selecting a point in the dataset family.

    n_x, n_y: counts of compositional input/output features.
    k_x, k_y: counts of non-compositional identity blocks.
    r: scale applied to the identity blocks.
    """

    n_x: int
    n_y: int
    k_x: int
    k_y: int
    r: float

    def __post_init__(self):
        for name in ("n_x", "n_y", "k_x", "k_y"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise ParameterError(f"{name} must be a nonnegative integer, got {v!r}")
        if self.n_x < 1:
            raise ParameterError("n_x must be at least 1 (need one pattern dimension)")
        if self.n_y > self.n_x:
            raise ParameterError(f"n_y={self.n_y} exceeds n_x={self.n_x}")
        if (self.k_x > 0 or self.k_y > 0) and not self.r > 0:
            raise ParameterError("r must be positive when identity blocks are present")
        if self.r < 0:
            raise ParameterError("r must be nonnegative")

    @property
    def n_examples(self) -> int:
        return 2 ** self.n_x

    @property
    def input_dim(self) -> int:
        return self.n_x + self.k_x * self.n_examples

    @property
    def output_dim(self) -> int:
        return self.n_y + self.k_y * self.n_examples

    def with_output_blocks(self, k_y: int) -> "DatasetParams":
        """Same point with the number of output identity blocks replaced."""
        return DatasetParams(self.n_x, self.n_y, self.k_x, k_y, self.r)


@dataclass(frozen=True)
class BlockLayout:
    """Row ranges (start, stop) of the four feature blocks."""

    comp_input: tuple[int, int]
    noncomp_input: tuple[int, int]
    comp_output: tuple[int, int]
    noncomp_output: tuple[int, int]


@dataclass(frozen=True)
class Dataset:
    input: np.ndarray          # (n_x + k_x * P) x P
    output: np.ndarray         # (n_y + k_y * P) x P
    layout: BlockLayout
    params: DatasetParams
    selected_features: tuple[int, ...]

    def __post_init__(self):
        self.input.flags.writeable = False
        self.output.flags.writeable = False


@dataclass(frozen=True)
class CovariancePair:
    sigma_x: np.ndarray    # E[X X^T], divisor 2**n_x
    sigma_yx: np.ndarray   # E[Y X^T]


def sign_patterns(n_bits: int) -> np.ndarray:
    """All sign patterns over ``n_bits``, one per column.

    Column j encodes integer j: bit i of j maps to row i (row 0 is the least
    significant bit), with 0 -> -1 and 1 -> +1.
    """
    if n_bits < 1:
        raise ParameterError("need at least one bit")
    cols = np.arange(2 ** n_bits)
    bits = (cols[None, :] >> np.arange(n_bits)[:, None]) & 1
    return (2.0 * bits - 1.0).astype(float)


def _choose_features(params: DatasetParams, feature_choice, seed: int) -> tuple[int, ...]:
    if isinstance(feature_choice, (list, tuple, np.ndarray)):
        sel = tuple(int(i) for i in feature_choice)
        if len(sel) != params.n_y or len(set(sel)) != len(sel):
            raise ParameterError("explicit feature choice must list n_y distinct indices")
        if any(i < 0 or i >= params.n_x for i in sel):
            raise ParameterError("feature index out of range")
        return tuple(sorted(sel))
    if feature_choice == "first":
        return tuple(range(params.n_y))
    if feature_choice == "random":
        rng = np.random.default_rng(seed)
        return tuple(sorted(int(i) for i in rng.choice(params.n_x, params.n_y, replace=False)))
    raise ParameterError(f"unknown feature_choice {feature_choice!r}")


def build_dataset(params: DatasetParams, feature_choice="first", seed: int = 0) -> Dataset:
    """Construct the dataset at ``params``.

    ``feature_choice`` selects which compositional input rows are copied to the
    output: "first" takes rows 0..n_y-1, "random" samples n_y distinct rows
    (seeded), or an explicit sequence of row indices may be given.
    """
    P = params.n_examples
    omega_x = sign_patterns(params.n_x)
    selected = _choose_features(params, feature_choice, seed)
    omega_y = omega_x[list(selected)] if selected else np.zeros((0, P))

    ident = params.r * np.eye(P)
    x = np.vstack([omega_x] + [ident] * params.k_x)
    y_blocks = ([omega_y] if params.n_y else []) + [ident] * params.k_y
    y = np.vstack(y_blocks) if y_blocks else np.zeros((0, P))

    layout = BlockLayout(
        comp_input=(0, params.n_x),
        noncomp_input=(params.n_x, params.input_dim),
        comp_output=(0, params.n_y),
        noncomp_output=(params.n_y, params.output_dim),
    )
    return Dataset(input=x, output=y, layout=layout, params=params, selected_features=selected)


def covariances(d: Dataset) -> CovariancePair:
    """Input and input-output second moments, averaged over the P examples."""
    P = d.params.n_examples
    return CovariancePair(sigma_x=d.input @ d.input.T / P, sigma_yx=d.output @ d.input.T / P)


def split(d: Dataset, n_train: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Uniform train/test split of the example columns, without replacement."""
    P = d.params.n_examples
    if not 1 <= n_train <= P:
        raise ParameterError(f"n_train must be in [1, {P}], got {n_train}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(P)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


# --- plain-text serialization -------------------------------------------------

def _write_matrix_csv(path: Path, m: np.ndarray) -> None:
    with open(path, "w") as f:
        for row in m:
            f.write(",".join(repr(float(v)) for v in row) + "\n")


def _read_matrix_csv(path: Path) -> np.ndarray:
    rows = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    return np.array(rows) if rows else np.zeros((0, 0))


def write_keyvalues(path: Path, items: dict) -> None:
    with open(path, "w") as f:
        for k, v in items.items():
            f.write(f"{k} = {v}\n")


def read_keyvalues(path: Path) -> dict[str, str]:
    out = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def save_dataset(d: Dataset, directory) -> None:
    """Write input.csv / output.csv (rows = features, columns = examples) plus metadata."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    _write_matrix_csv(directory / "input.csv", d.input)
    _write_matrix_csv(directory / "output.csv", d.output)
    p, lay = d.params, d.layout
    write_keyvalues(directory / "metadata.txt", {
        "n_x": p.n_x, "n_y": p.n_y, "k_x": p.k_x, "k_y": p.k_y, "r": repr(p.r),
        "selected_features": ",".join(str(i) for i in d.selected_features),
        "comp_input_rows": f"{lay.comp_input[0]}:{lay.comp_input[1]}",
        "noncomp_input_rows": f"{lay.noncomp_input[0]}:{lay.noncomp_input[1]}",
        "comp_output_rows": f"{lay.comp_output[0]}:{lay.comp_output[1]}",
        "noncomp_output_rows": f"{lay.noncomp_output[0]}:{lay.noncomp_output[1]}",
    })


def load_dataset(directory) -> Dataset:
    directory = Path(directory)
    meta = read_keyvalues(directory / "metadata.txt")
    params = DatasetParams(int(meta["n_x"]), int(meta["n_y"]), int(meta["k_x"]),
                           int(meta["k_y"]), float(meta["r"]))
    sel = tuple(int(i) for i in meta["selected_features"].split(",") if i != "")
    d = build_dataset(params, feature_choice=sel)
    stored_in = _read_matrix_csv(directory / "input.csv")
    stored_out = _read_matrix_csv(directory / "output.csv")
    if stored_in.shape != d.input.shape or not np.allclose(stored_in, d.input):
        raise ParameterError("stored input does not match the declared parameters")
    if params.output_dim and (stored_out.shape != d.output.shape or not np.allclose(stored_out, d.output)):
        raise ParameterError("stored output does not match the declared parameters")
    return d
