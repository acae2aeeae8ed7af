"""Observables extracted from a network map for comparison with theory."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .datasets import BlockLayout, ParameterError, write_keyvalues
from .theory import AnalyticSVD


@dataclass(frozen=True)
class NormPartition:
    comp_comp: float
    noncomp_comp: float
    comp_noncomp: float
    noncomp_noncomp: float

    def as_array(self) -> np.ndarray:
        return np.array([self.comp_comp, self.noncomp_comp,
                         self.comp_noncomp, self.noncomp_noncomp])


@dataclass(frozen=True)
class CurveDeviation:
    max_abs: float
    epoch: int


@dataclass(frozen=True)
class DeviationReport:
    """Per-curve maximum absolute gap between simulation and prediction."""

    entries: Mapping[str, CurveDeviation]

    def worst(self) -> float:
        return max((e.max_abs for e in self.entries.values()), default=0.0)

    def to_rows(self) -> list[tuple[str, float, int]]:
        return [(name, e.max_abs, e.epoch) for name, e in sorted(self.entries.items())]

    def save(self, path_txt, path_csv) -> None:
        write_keyvalues(Path(path_txt), {
            name: f"{e.max_abs!r} at epoch {e.epoch}" for name, e in sorted(self.entries.items())})
        with open(path_csv, "w") as f:
            f.write("curve_id,max_abs_deviation,epoch_of_max\n")
            for name, dev, epoch in self.to_rows():
                f.write(f"{name},{dev!r},{epoch}\n")


def empirical_mode_values(mapping: np.ndarray, svd: AnalyticSVD) -> np.ndarray:
    """Projection of the map onto the analytic singular directions.

    Returns diag(U^T map V) over the modes carried by U; using the fixed
    analytic vectors avoids the sign and permutation ambiguity of a fresh
    numerical SVD at every epoch.
    """
    n_out, n_in = svd.u_matrix.shape[0], svd.v_matrix.shape[0]
    if mapping.shape != (n_out, n_in):
        raise ParameterError(f"map shape {mapping.shape} does not match ({n_out}, {n_in})")
    v = svd.v_matrix[:, svd.mode_indices]
    return np.einsum("ij,ik,kj->j", svd.u_matrix, mapping, v)


def partitioned_norms(mapping: np.ndarray, layout: BlockLayout) -> NormPartition:
    """Frobenius norm of each of the four blocks of the map."""
    ci, ni = layout.comp_input, layout.noncomp_input
    co, no = layout.comp_output, layout.noncomp_output
    if mapping.shape != (no[1], ni[1]):
        raise ParameterError(f"map shape {mapping.shape} does not cover layout "
                             f"({no[1]} x {ni[1]})")
    return NormPartition(
        comp_comp=float(np.linalg.norm(mapping[co[0]:co[1], ci[0]:ci[1]])),
        noncomp_comp=float(np.linalg.norm(mapping[co[0]:co[1], ni[0]:ni[1]])),
        comp_noncomp=float(np.linalg.norm(mapping[no[0]:no[1], ci[0]:ci[1]])),
        noncomp_noncomp=float(np.linalg.norm(mapping[no[0]:no[1], ni[0]:ni[1]])))


def systematicity_verdict(p: NormPartition, tol: float | None = None) -> str:
    """"systematic" when the cross-block norms vanish while the compositional
    mapping is present.

    By default the threshold is 1e-3 of the compositional norm (finite
    training never produces exact zeros in unconstrained blocks).
    """
    if tol is None:
        tol = 1e-3 * p.comp_comp
    if tol < 0:
        raise ParameterError("tol must be nonnegative")
    ok = p.noncomp_comp < tol and p.comp_noncomp < tol and p.comp_comp > tol
    return "systematic" if ok else "non-systematic"


def deviation(epochs, simulated: Mapping[str, np.ndarray],
              predicted: Mapping[str, np.ndarray]) -> DeviationReport:
    """Max-abs gap per curve between matching simulated and predicted series."""
    epochs = np.asarray(epochs)
    keys = set(simulated) & set(predicted)
    if not keys:
        raise ParameterError("no common curves between simulation and prediction")
    entries = {}
    for key in sorted(keys):
        sim = np.asarray(simulated[key], dtype=float)
        pred = np.asarray(predicted[key], dtype=float)
        if sim.shape != pred.shape or sim.shape != epochs.shape:
            raise ParameterError(f"time grids differ for curve {key!r}")
        gaps = np.abs(sim - pred)
        i = int(np.argmax(gaps))
        entries[key] = CurveDeviation(max_abs=float(gaps[i]), epoch=int(epochs[i]))
    return DeviationReport(entries=entries)
