"""Closed-form results: singular-value spectra, gradient-flow trajectories,
the exact SVD of both covariance matrices, partitioned-norm time courses for
every architecture, and exact full-rank sampling probabilities for three
compositional features.

All formulas are expressed in the dataset parameters; every assembled matrix
is checked numerically against the explicitly constructed covariances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .architectures import Architecture, FULLY_PARTITIONED, SHALLOW
from .datasets import (Dataset, DatasetParams, ParameterError, build_dataset,
                       covariances)

PI0_FLOOR = 1e-12


class ConsistencyError(RuntimeError):
    """Raised when an assembled closed form fails its numerical self-check."""


# --- spectra -------------------------------------------------------------------

def _spectrum_values(P: int, k_x: int, k_y: int, r: float) -> tuple[float, float, float, float, float]:
    """Distinct singular values and input eigenvalues for P examples and
    ``k_x``/``k_y`` identity blocks of scale ``r``."""
    kxP = k_x * r * r + P
    kyP = k_y * r * r + P
    lam1 = math.sqrt(kxP * kyP) / P
    lam2 = math.sqrt(kxP * k_y) * r / P
    lam3 = math.sqrt(k_x * k_y) * r * r / P
    delta1 = kxP / P
    delta2 = k_x * r * r / P
    return lam1, lam2, lam3, delta1, delta2


@dataclass(frozen=True)
class ModeSpectrum:
    """The three distinct input-output singular values with multiplicities,
    the two input eigenvalues, and the asymptotic strengths lambda/delta.

    Modes whose multiplicity is zero are reported with value 0.  ``pi3_star``
    is None when delta2 = 0 (no identity blocks on the input side).
    """

    lambda1: float
    lambda2: float
    lambda3: float
    delta1: float
    delta2: float
    pi1_star: float
    pi2_star: float
    pi3_star: float | None
    mult1: int
    mult2: int
    mult3: int


def mode_spectrum(params: DatasetParams) -> ModeSpectrum:
    P = params.n_examples
    lam1, lam2, lam3, d1, d2 = _spectrum_values(P, params.k_x, params.k_y, params.r)
    mult1 = params.n_y
    mult2 = params.n_x - params.n_y if lam2 > 0 else 0
    mult3 = P - params.n_x if lam3 > 0 else 0
    lam1 = lam1 if mult1 > 0 else 0.0
    lam2 = lam2 if mult2 > 0 else 0.0
    lam3 = lam3 if mult3 > 0 else 0.0
    return ModeSpectrum(
        lambda1=lam1, lambda2=lam2, lambda3=lam3, delta1=d1, delta2=d2,
        pi1_star=lam1 / d1, pi2_star=lam2 / d1,
        pi3_star=(lam3 / d2) if d2 > 0 else None,
        mult1=mult1, mult2=mult2, mult3=mult3)


# --- trajectories ----------------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryConfig:
    """Initial mode strength, learning rate, and the bit count fixing the
    time constant tau = 1 / (2**n_x * epsilon)."""

    pi0: float
    epsilon: float
    n_x: int

    def __post_init__(self):
        if not self.pi0 > 0:
            raise ParameterError("pi0 must be positive (the deep form is singular at 0)")
        if not self.epsilon > 0:
            raise ParameterError("epsilon must be positive")
        if self.n_x < 1:
            raise ParameterError("n_x must be at least 1")

    @property
    def tau(self) -> float:
        return 1.0 / (2 ** self.n_x * self.epsilon)


def _deep_curve(lam: float, delta: float, pi0: float, tau: float, t: np.ndarray) -> np.ndarray:
    if lam == 0.0:
        return np.where(t == 0, pi0, 0.0)
    q = 1.0 - lam / (delta * pi0)
    return (lam / delta) / (1.0 - q * np.exp(-2.0 * lam * t / tau))


def _shallow_curve(lam: float, delta: float, pi0: float, tau: float, t: np.ndarray) -> np.ndarray:
    decay = np.exp(-delta * t / tau)
    return (lam / delta) * (1.0 - decay) + pi0 * decay


def deep_mode_value(lam: float, delta: float, cfg: TrajectoryConfig, t) -> np.ndarray | float:
    """Strength of one mode of a one-hidden-layer network after t epochs.

    Uncorrelated modes (lam = 0) are reported as 0 for t > 0: gradient flow
    decays them toward zero from a small start.
    """
    if delta <= 0:
        raise ParameterError("delta must be positive")
    if lam < 0:
        raise ParameterError("lam must be nonnegative")
    out = _deep_curve(lam, delta, cfg.pi0, cfg.tau, np.asarray(t, dtype=float))
    return float(out) if np.isscalar(t) else out


def shallow_mode_value(lam: float, delta: float, cfg: TrajectoryConfig, t) -> np.ndarray | float:
    """Strength of one mode of a network without hidden layer after t epochs."""
    if delta <= 0:
        raise ParameterError("delta must be positive")
    if lam < 0:
        raise ParameterError("lam must be nonnegative")
    out = _shallow_curve(lam, delta, cfg.pi0, cfg.tau, np.asarray(t, dtype=float))
    return float(out) if np.isscalar(t) else out


def _group_trajectories(lam: float, delta: float, pi0s, epsilon: float, n_x: int,
                        times: np.ndarray, depth: str) -> np.ndarray:
    """Trajectories of one degenerate group, one row per initial strength.

    Deep initial strengths are floored at PI0_FLOOR (the closed form is
    singular at 0); shallow ones may be signed.
    """
    if depth not in ("deep", "shallow"):
        raise ParameterError(f"depth must be 'deep' or 'shallow', got {depth!r}")
    tau = 1.0 / (2 ** n_x * epsilon)
    rows = []
    for p0 in np.atleast_1d(np.asarray(pi0s, dtype=float)):
        if depth == "deep":
            rows.append(_deep_curve(lam, delta, max(p0, PI0_FLOOR), tau, times))
        else:
            rows.append(_shallow_curve(lam, delta, p0, tau, times))
    return np.asarray(rows)


# --- closed-form SVD -------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticSVD:
    """Block-assembled SVD of the input-output covariance, sharing its right
    singular vectors with the eigendecomposition of the input covariance.

    ``v_matrix`` carries one column per input mode and ``d_values`` the input
    eigenvalues on those modes.  ``u_matrix`` carries one column per mode with
    nonzero input-output singular value; ``mode_indices`` maps those columns
    to v_matrix columns (the identity whenever both identity families are
    present).  ``mode_ids`` labels each u-column 1 (selected compositional),
    2 (unselected compositional) or 3 (identity-family direction).
    """

    u_matrix: np.ndarray
    s_values: np.ndarray
    v_matrix: np.ndarray
    d_values: np.ndarray
    mode_indices: np.ndarray
    mode_ids: tuple[int, ...]
    a_mat: np.ndarray
    b_mat: np.ndarray
    c_mat: np.ndarray
    t_mat: np.ndarray | None = None
    h_values: np.ndarray | None = None
    p_mat: np.ndarray | None = None

    @property
    def s_matrix(self) -> np.ndarray:
        return np.diag(self.s_values)

    @property
    def d_matrix(self) -> np.ndarray:
        return np.diag(self.d_values)

    def reconstruct_sigma_yx(self) -> np.ndarray:
        return self.u_matrix @ np.diag(self.s_values) @ self.v_matrix[:, self.mode_indices].T

    def reconstruct_sigma_x(self) -> np.ndarray:
        return self.v_matrix @ np.diag(self.d_values) @ self.v_matrix.T

    def groups(self) -> list[tuple[int, float, float, np.ndarray]]:
        """Distinct modes as (mode_id, lambda, delta, u-column indices)."""
        ids = np.asarray(self.mode_ids)
        out = []
        for mode_id in (1, 2, 3):
            cols = np.nonzero(ids == mode_id)[0]
            if len(cols):
                out.append((mode_id, float(self.s_values[cols[0]]),
                            float(self.d_values[self.mode_indices[cols[0]]]), cols))
        return out


def _null_space_basis(omega_x: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the null space of the compositional input rows."""
    _, _, vh = np.linalg.svd(omega_x, full_matrices=True)
    return vh[omega_x.shape[0]:].T.copy()  # P x (P - n_x)


def analytic_svd(d: Dataset, residual_tol: float = 1e-6) -> AnalyticSVD:
    """Assemble U, S, V, D from the block formulas and self-check against the
    explicit covariances.

    The full block form needs at least one identity family on each side; with
    k_x = 0 or k_y = 0 a reduced form keeps only the modes that exist.
    """
    p = d.params
    P = p.n_examples
    nx, ny, kx, ky, r = p.n_x, p.n_y, p.k_x, p.k_y, p.r
    omx = np.asarray(d.input[:nx])
    omy = np.asarray(d.output[:ny])
    sel = list(d.selected_features)

    lam1, lam2, lam3, delta1, delta2 = _spectrum_values(P, kx, ky, r)

    a_mat = (omy @ omx.T).T @ (omy @ omx.T)
    b_mat = omy.T @ omy @ omx.T
    c_mat = omx.T @ omx @ omx.T
    t_mat = h_values = p_mat = None

    if kx >= 1:
        q = _null_space_basis(omx)
        a_coef = math.sqrt(P / (kx * r * r + P))
        b_coef = math.sqrt(r * r / (P * (kx * r * r + P)))
        v_top = np.hstack([a_coef * np.eye(nx), np.zeros((nx, P - nx))])
        v_low = np.hstack([b_coef * omx.T, q / math.sqrt(kx)])
        v_matrix = np.vstack([v_top] + [v_low] * kx)
        d_values = np.concatenate([np.full(nx, delta1), np.full(P - nx, delta2)])
    else:
        q = None
        v_matrix = np.eye(nx)
        d_values = np.full(nx, delta1)

    if ky >= 1:
        c1 = math.sqrt(1.0 / (P * (ky * r * r + P)))
        c2 = math.sqrt(r * r / (P ** 3 * (ky * r * r + P)))
        c3 = math.sqrt(r * r / (P ** 3 * (ky * r * r)))
        comp_top = c1 * (omy @ omx.T)
        comp_low = c2 * b_mat + c3 * (c_mat - b_mat)
        if kx >= 1:
            t_mat = q
            p_mat = q
            h_values = np.full(P - nx, math.sqrt(1.0 / (kx * ky)))
            u_matrix = np.vstack(
                [np.hstack([comp_top, np.zeros((ny, P - nx))])]
                + [np.hstack([comp_low, q / math.sqrt(ky)])] * ky)
            mode_indices = np.arange(P)
            s_values = np.full(P, lam2)
            s_values[sel] = lam1
            s_values[nx:] = lam3
            mode_ids = tuple(1 if i in sel else 2 for i in range(nx)) + (3,) * (P - nx)
        else:
            u_matrix = np.vstack([comp_top] + [comp_low] * ky)
            mode_indices = np.arange(nx)
            s_values = np.full(nx, lam2)
            s_values[sel] = lam1
            mode_ids = tuple(1 if i in sel else 2 for i in range(nx))
    else:
        # no identity blocks on the output: only the selected compositional
        # modes carry signal
        u_matrix = (omy @ omx.T)[:, sel] / P
        mode_indices = np.asarray(sel, dtype=int)
        s_values = np.full(ny, lam1)
        mode_ids = (1,) * ny

    svd = AnalyticSVD(u_matrix=u_matrix, s_values=s_values, v_matrix=v_matrix,
                      d_values=d_values, mode_indices=np.asarray(mode_indices, dtype=int),
                      mode_ids=mode_ids, a_mat=a_mat, b_mat=b_mat, c_mat=c_mat,
                      t_mat=t_mat, h_values=h_values, p_mat=p_mat)

    cov = covariances(d)
    res_yx = np.abs(svd.reconstruct_sigma_yx() - cov.sigma_yx).max() if u_matrix.size else 0.0
    res_x = np.abs(svd.reconstruct_sigma_x() - cov.sigma_x).max()
    n_u = u_matrix.shape[1]
    orth_u = np.abs(u_matrix.T @ u_matrix - np.eye(n_u)).max() if n_u else 0.0
    orth_v = np.abs(v_matrix.T @ v_matrix - np.eye(v_matrix.shape[1])).max()
    worst = max(res_yx, res_x, orth_u, orth_v)
    if worst > residual_tol:
        raise ConsistencyError(f"closed-form SVD self-check failed: residual {worst:.3e}")
    return svd


# --- partitioned norms ------------------------------------------------------------

@dataclass(frozen=True)
class NormCurves:
    """Predicted Frobenius norms of the four map blocks over time."""

    times: np.ndarray
    comp_comp: np.ndarray
    noncomp_comp: np.ndarray
    comp_noncomp: np.ndarray
    noncomp_noncomp: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"norm_comp_comp": self.comp_comp,
                "norm_noncomp_comp": self.noncomp_comp,
                "norm_comp_noncomp": self.comp_noncomp,
                "norm_noncomp_noncomp": self.noncomp_noncomp}


@dataclass(frozen=True)
class ModuleFrame:
    """Effective view one module has of the dataset.

    ``nx_term``/``ny_term``/``kx_eff``/``ky_eff`` feed the norm coefficients.
    ``groups`` maps mode_id -> (lambda, delta, count, u_block, v_block) with
    the effective singular vectors in module-local row coordinates, used to
    estimate initial mode strengths from initialized weights.
    """

    name: str
    in_rows: tuple[int, int]
    out_rows: tuple[int, int]
    nx_term: int
    ny_term: int
    kx_eff: int
    ky_eff: int
    groups: Mapping[int, tuple[float, float, int, np.ndarray, np.ndarray]]


def _frame_from_dataset(name: str, in_rows, out_rows, eff: Dataset,
                        nx_term: int | None = None) -> ModuleFrame:
    p = eff.params
    svd = analytic_svd(eff)
    groups = {}
    for mode_id, lam, delta, cols in svd.groups():
        if lam <= 0:
            continue
        groups[mode_id] = (lam, delta, len(cols),
                           svd.u_matrix[:, cols],
                           svd.v_matrix[:, svd.mode_indices[cols]])
    return ModuleFrame(name=name, in_rows=tuple(in_rows), out_rows=tuple(out_rows),
                       nx_term=p.n_x if nx_term is None else nx_term,
                       ny_term=p.n_y, kx_eff=p.k_x, ky_eff=p.k_y, groups=groups)


def architecture_frames(d: Dataset, arch: Architecture) -> list[ModuleFrame]:
    """Per-module effective spectra and singular-vector blocks.

    Every architecture reduces to modules that each train on a restricted
    dataset; the restriction fixes which distinct modes a module carries and
    the effective parameters entering its norm formulas.
    """
    p = d.params
    P = p.n_examples
    frames = []
    for name, in_rows, out_rows in arch.module_rows(p):
        if name == "dense":
            frames.append(_frame_from_dataset(name, in_rows, out_rows, d))
        elif name == "comp":
            if arch.variant == FULLY_PARTITIONED:
                eff = build_dataset(DatasetParams(p.n_x, p.n_y, 0, 0, 0.0),
                                    feature_choice=d.selected_features)
            else:
                eff = build_dataset(p.with_output_blocks(0),
                                    feature_choice=d.selected_features)
            frames.append(_frame_from_dataset(name, in_rows, out_rows, eff))
        elif name == "noncomp" and arch.variant == FULLY_PARTITIONED:
            # identity blocks to identity blocks: P equal modes, closed form
            lam3 = math.sqrt(p.k_x * p.k_y) * p.r * p.r / P
            delta2 = p.k_x * p.r * p.r / P
            u_blk = np.vstack([np.eye(P)] * p.k_y) / math.sqrt(p.k_y)
            v_blk = np.vstack([np.eye(P)] * p.k_x) / math.sqrt(p.k_x)
            frames.append(ModuleFrame(name=name, in_rows=tuple(in_rows), out_rows=tuple(out_rows),
                                      nx_term=0, ny_term=0, kx_eff=p.k_x, ky_eff=p.k_y,
                                      groups={3: (lam3, delta2, P, u_blk, v_blk)}))
        elif name == "noncomp":
            eff = build_dataset(DatasetParams(p.n_x, 0, p.k_x, p.k_y, p.r))
            frames.append(_frame_from_dataset(name, in_rows, out_rows, eff))
        elif name == "left":
            eff = build_dataset(p.with_output_blocks(arch.k_y_left),
                                feature_choice=d.selected_features)
            frames.append(_frame_from_dataset(name, in_rows, out_rows, eff))
        elif name == "right":
            eff = build_dataset(DatasetParams(p.n_x, 0, p.k_x, arch.k_y_right, p.r))
            frames.append(_frame_from_dataset(name, in_rows, out_rows, eff))
    return frames


def _norm_coefficients(P: int, frame: ModuleFrame, r: float) -> dict[str, dict[int, float]]:
    """Coefficients of pi_alpha^2 in each squared block norm for one module."""
    nx, ny, kx, m = frame.nx_term, frame.ny_term, frame.kx_eff, frame.ky_eff
    kxP = kx * r * r + P
    myP = m * r * r + P
    coef: dict[str, dict[int, float]] = {
        "comp_comp": {}, "noncomp_comp": {}, "comp_noncomp": {}, "noncomp_noncomp": {}}
    if ny > 0:
        coef["comp_comp"][1] = P * P * ny / (kxP * myP)
        if kx > 0:
            coef["noncomp_comp"][1] = P * ny * kx * r * r / (kxP * myP)
    if m > 0:
        if ny > 0:
            coef["comp_noncomp"][1] = P * m * ny * r * r / (kxP * myP)
            if kx > 0:
                coef["noncomp_noncomp"][1] = kx * m * ny * r ** 4 / (kxP * myP)
        if nx - ny > 0:
            coef["comp_noncomp"][2] = P * (nx - ny) / kxP
            if kx > 0:
                coef["noncomp_noncomp"][2] = (nx - ny) * kx * r * r / kxP
        if P - nx > 0 and kx > 0:
            coef["noncomp_noncomp"][3] = float(P - nx)
    return coef


def predicted_norms(params: DatasetParams, arch: Architecture, cfg: TrajectoryConfig,
                    times, depth: str = "deep",
                    strengths: Mapping[tuple[str, int], Sequence[float]] | None = None,
                    frames: list[ModuleFrame] | None = None) -> NormCurves:
    """Time courses of the four partitioned norms under ``arch``.

    Each module composes its own mode trajectories.  A mode's initial
    strengths come from ``strengths`` (keyed by (module name, mode id),
    typically estimated from an initialized network), falling back to the
    scalar ``cfg.pi0``.  The Shallow variant uses the shallow trajectory
    form; everything else the deep form.
    """
    arch.validate_for(params)
    times = np.asarray(times, dtype=float)
    if arch.variant == SHALLOW:
        depth = "shallow"
    if frames is None:
        frames = architecture_frames(build_dataset(params), arch)
    total = {k: np.zeros_like(times) for k in
             ("comp_comp", "noncomp_comp", "comp_noncomp", "noncomp_noncomp")}
    P = params.n_examples
    for frame in frames:
        coef = _norm_coefficients(P, frame, params.r)
        mean_sq = {}
        for mode_id, (lam, delta, _count, _u, _v) in frame.groups.items():
            pi0s = None if strengths is None else strengths.get((frame.name, mode_id))
            if pi0s is None:
                pi0s = [cfg.pi0]
            trajs = _group_trajectories(lam, delta, pi0s, cfg.epsilon, cfg.n_x, times, depth)
            mean_sq[mode_id] = (trajs ** 2).mean(axis=0)
        for norm_name, terms in coef.items():
            for mode_id, c in terms.items():
                if mode_id in mean_sq:
                    total[norm_name] = total[norm_name] + c * mean_sq[mode_id]
    return NormCurves(times=times,
                      comp_comp=np.sqrt(total["comp_comp"]),
                      noncomp_comp=np.sqrt(total["noncomp_comp"]),
                      comp_noncomp=np.sqrt(total["comp_noncomp"]),
                      noncomp_noncomp=np.sqrt(total["noncomp_noncomp"]))


def predicted_mode_curves(params: DatasetParams, cfg: TrajectoryConfig, times,
                          depth: str = "deep",
                          strengths: Mapping[int, Sequence[float]] | None = None
                          ) -> dict[int, np.ndarray]:
    """Trajectories of the distinct modes of the dense map.

    With several initial strengths per group (one per degenerate direction)
    the group mean trajectory is returned, matching the mean of the per-mode
    diagonal projections of a trained map.
    """
    times = np.asarray(times, dtype=float)
    spec = mode_spectrum(params)
    out = {}
    for mode_id, lam, delta, count in ((1, spec.lambda1, spec.delta1, spec.mult1),
                                       (2, spec.lambda2, spec.delta1, spec.mult2),
                                       (3, spec.lambda3, spec.delta2, spec.mult3)):
        if count == 0 or lam <= 0:
            continue
        pi0s = [cfg.pi0] if strengths is None else strengths.get(mode_id, [cfg.pi0])
        out[mode_id] = _group_trajectories(lam, delta, pi0s, cfg.epsilon, cfg.n_x,
                                           times, depth).mean(axis=0)
    return out


# --- exact rank probability for three compositional features -----------------------

def exact_rank_probability_3features(sample_size: int) -> float:
    """Probability that ``sample_size`` distinct 3-bit sign patterns span rank 3.

    Closed form via the opposite-pair argument: three distinct patterns are
    dependent exactly when two of them are negatives of each other, and four
    distinct patterns are rank-deficient exactly when they form two opposite
    pairs.  Five or more distinct patterns always span.
    """
    if not isinstance(sample_size, (int, np.integer)) or not 1 <= sample_size <= 8:
        raise ParameterError("sample_size must be an integer between 1 and 8")
    if sample_size <= 2:
        return 0.0
    if sample_size == 3:
        # draw three patterns avoiding the negative of any earlier one
        return float(Fraction(8, 8) * Fraction(6, 7) * Fraction(4, 6))
    if sample_size == 4:
        # at most one opposite pair may appear among four draws
        no_pair = Fraction(6, 7) * Fraction(4, 6) * Fraction(2, 5)
        pair_second = Fraction(1, 7) * Fraction(6, 6) * Fraction(4, 5)
        pair_third = Fraction(6, 7) * Fraction(2, 6) * Fraction(4, 5)
        pair_fourth = Fraction(6, 7) * Fraction(4, 6) * Fraction(3, 5)
        return float(no_pair + pair_second + pair_third + pair_fourth)
    return 1.0
