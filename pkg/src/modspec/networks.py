"""Linear networks under five connectivity variants and a two-parameter
family of learning rules, trained full batch.

The per-epoch update is eps * W2^T (Y - W2 W1 X) X^T (and its W2 analogue),
i.e. gradient descent on the half summed squared error.  With t counted in
epochs this matches the analytic trajectories with time constant
tau = 1 / (2**n_x * eps).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .architectures import Architecture, SHALLOW
from .datasets import BlockLayout, Dataset, ParameterError
from .metrics import partitioned_norms
from .theory import (AnalyticSVD, ModuleFrame, analytic_svd, architecture_frames)

GD = "gradient_descent"
ANTI_HEBBIAN = "anti_hebbian"
CONTRASTIVE_HEBBIAN = "contrastive_hebbian"
HEBBIAN = "hebbian"
QUASI_PREDICTIVE_CODING = "quasi_predictive_coding"

DEFAULT_GAMMA_SMALL = 1e-3
DEFAULT_ETA_MAG = 1e-3


class DivergenceError(RuntimeError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"training diverged at epoch {epoch} (loss {loss:.3e})")
        self.epoch = epoch
        self.loss = loss


@dataclass(frozen=True)
class LearningRule:
    """Point (gamma, eta) in the two-parameter update family.

    gamma scales a contrastive term on the output weights; eta scales a
    Hebbian (eta > 0, with a subspace-normalizing correction) or anti-Hebbian
    (eta < 0, with row-norm rescaling) term on the input weights.  Gradient
    descent is (0, 0).
    """

    gamma: float
    eta: float
    preset: str = "custom"

    @classmethod
    def gradient_descent(cls) -> "LearningRule":
        return cls(0.0, 0.0, GD)

    @classmethod
    def anti_hebbian(cls, gamma_small: float = DEFAULT_GAMMA_SMALL,
                     eta_mag: float = DEFAULT_ETA_MAG) -> "LearningRule":
        return cls(gamma_small, -abs(eta_mag), ANTI_HEBBIAN)

    @classmethod
    def contrastive_hebbian(cls) -> "LearningRule":
        return cls(1.0, 0.0, CONTRASTIVE_HEBBIAN)

    @classmethod
    def hebbian(cls, gamma_small: float = DEFAULT_GAMMA_SMALL,
                eta_mag: float = DEFAULT_ETA_MAG) -> "LearningRule":
        return cls(gamma_small, abs(eta_mag), HEBBIAN)

    @classmethod
    def quasi_predictive_coding(cls) -> "LearningRule":
        return cls(-1.0, 0.0, QUASI_PREDICTIVE_CODING)

    @classmethod
    def from_name(cls, name: str) -> "LearningRule":
        table = {
            "gd": cls.gradient_descent, GD: cls.gradient_descent,
            "ah": cls.anti_hebbian, ANTI_HEBBIAN: cls.anti_hebbian,
            "ch": cls.contrastive_hebbian, CONTRASTIVE_HEBBIAN: cls.contrastive_hebbian,
            "hebb": cls.hebbian, HEBBIAN: cls.hebbian,
            "pc": cls.quasi_predictive_coding,
            QUASI_PREDICTIVE_CODING: cls.quasi_predictive_coding,
        }
        key = name.replace("-", "_").lower()
        if key not in table:
            raise ParameterError(f"unknown learning rule {name!r}")
        return table[key]()


@dataclass(frozen=True)
class TrainConfig:
    epsilon: float
    epochs: int
    init_std: float
    seed: int = 0
    record_every: int = 1

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ParameterError("epsilon must be nonnegative")
        if not self.init_std > 0:
            raise ParameterError("init_std must be positive")
        if self.epochs < 0 or self.record_every < 1:
            raise ParameterError("epochs must be >= 0 and record_every >= 1")


@dataclass
class Module:
    in_rows: tuple[int, int]
    out_rows: tuple[int, int]
    weights: list[np.ndarray]  # [w] shallow, [w1, w2] deep

    def compose(self) -> np.ndarray:
        if len(self.weights) == 1:
            return self.weights[0]
        return self.weights[1] @ self.weights[0]


@dataclass
class NetworkState:
    modules: list[Module]
    depth: str                      # "deep" | "shallow"
    arch: Architecture
    hidden_width: int | None
    input_dim: int
    output_dim: int

    def clone(self) -> "NetworkState":
        return copy.deepcopy(self)


def _required_width(d: Dataset, in_rows: tuple[int, int]) -> int:
    block = d.input[in_rows[0]:in_rows[1]]
    return int(np.linalg.matrix_rank(block, tol=1e-8)) if block.size else 0


def init_network(d: Dataset, arch: Architecture, depth: str, cfg: TrainConfig,
                 hidden_width: int | None = None) -> NetworkState:
    """Sample all weights from a zero-mean normal with std ``cfg.init_std``.

    Deep dense networks need at least 2**n_x hidden units; modular variants
    need at least the rank of their module's effective input covariance.
    """
    if depth not in ("deep", "shallow"):
        raise ParameterError(f"depth must be 'deep' or 'shallow', got {depth!r}")
    if arch.variant == SHALLOW:
        depth = "shallow"
    arch.validate_for(d.params)
    P = d.params.n_examples
    rows = arch.module_rows(d.params)
    if depth == "deep":
        minimum = P if arch.variant in ("dense",) else \
            max((_required_width(d, in_rows) for _, in_rows, _ in rows), default=1)
        if hidden_width is None:
            hidden_width = minimum
        if hidden_width < minimum:
            raise ParameterError(
                f"hidden_width {hidden_width} below the minimum {minimum} for this architecture")
    else:
        hidden_width = None
    rng = np.random.default_rng(cfg.seed)
    modules = []
    for _name, in_rows, out_rows in rows:
        n_in = in_rows[1] - in_rows[0]
        n_out = out_rows[1] - out_rows[0]
        if depth == "deep":
            w1 = rng.normal(0.0, cfg.init_std, (hidden_width, n_in))
            w2 = rng.normal(0.0, cfg.init_std, (n_out, hidden_width))
            modules.append(Module(in_rows, out_rows, [w1, w2]))
        else:
            modules.append(Module(in_rows, out_rows, [rng.normal(0.0, cfg.init_std, (n_out, n_in))]))
    return NetworkState(modules=modules, depth=depth, arch=arch,
                        hidden_width=hidden_width,
                        input_dim=d.params.input_dim, output_dim=d.params.output_dim)


def effective_map(net: NetworkState, layout: BlockLayout | None = None) -> np.ndarray:
    """The composed linear map of every module placed at its block position;
    rows no module writes stay exactly zero."""
    out = np.zeros((net.output_dim, net.input_dim))
    for m in net.modules:
        out[m.out_rows[0]:m.out_rows[1], m.in_rows[0]:m.in_rows[1]] = m.compose()
    if layout is not None and (layout.noncomp_output[1] != net.output_dim
                               or layout.noncomp_input[1] != net.input_dim):
        raise ParameterError("layout does not match network dimensions")
    return out


# --- initial mode strengths ---------------------------------------------------------

def estimate_initial_strengths(net: NetworkState, frames: Sequence[ModuleFrame],
                               method: str = "auto") -> dict[tuple[str, int], np.ndarray]:
    """Per-module, per-mode initial strengths for theory overlays.

    "balanced" (deep default) extrapolates the growing balanced component of
    the linearized dynamics back to t = 0: the eigenvalues of
    (U_g^T W2 + (W1 V_g)^T)(...)^T / 4 within each degenerate group.  The raw
    diagonal of U^T W2 W1 V mixes signs and underestimates the effective
    starting point.  "projection" (shallow default) reads the signed diagonal
    of the initial map directly, which the shallow dynamics follow exactly.
    """
    if method == "auto":
        method = "balanced" if net.depth == "deep" else "projection"
    if method not in ("balanced", "projection"):
        raise ParameterError(f"unknown strength estimator {method!r}")
    out: dict[tuple[str, int], np.ndarray] = {}
    frame_list = list(frames)
    if len(frame_list) != len(net.modules):
        raise ParameterError("frames do not match network modules")
    for module, frame in zip(net.modules, frame_list):
        if (module.in_rows, module.out_rows) != (frame.in_rows, frame.out_rows):
            raise ParameterError(f"module rows {module.in_rows}/{module.out_rows} do not "
                                 f"match frame {frame.name}")
        for mode_id, (lam, delta, count, u_blk, v_blk) in frame.groups.items():
            if net.depth == "deep":
                w1, w2 = module.weights
                if method == "balanced":
                    c = u_blk.T @ w2 + (w1 @ v_blk).T
                    pi0s = np.clip(np.linalg.eigvalsh(c @ c.T) / 4.0, 1e-12, None)
                else:
                    m0 = w2 @ w1
                    pi0s = np.clip(np.einsum("ij,ik,kj->j", u_blk, m0, v_blk), 1e-12, None)
            else:
                w = module.weights[0]
                pi0s = np.einsum("ij,ik,kj->j", u_blk, w, v_blk)
            out[(frame.name, mode_id)] = np.asarray(pi0s, dtype=float)
    return out


# --- training ------------------------------------------------------------------------

@dataclass
class TrainingHistory:
    """Recorded observables of one training run.

    ``mode_values`` holds the mean diagonal projection per distinct mode
    (columns ordered by ``mode_ids``); ``norms`` the four partitioned norms.
    """

    epochs: np.ndarray
    losses: np.ndarray
    mode_values: np.ndarray
    mode_ids: tuple[int, ...]
    norms: np.ndarray
    test_losses: np.ndarray | None
    final_state: NetworkState
    initial_strengths: dict[tuple[str, int], np.ndarray]

    def curves(self) -> dict[str, np.ndarray]:
        out = {"loss": self.losses}
        for j, mode_id in enumerate(self.mode_ids):
            out[f"mode_{mode_id}"] = self.mode_values[:, j]
        for j, name in enumerate(("norm_comp_comp", "norm_noncomp_comp",
                                  "norm_comp_noncomp", "norm_noncomp_noncomp")):
            out[name] = self.norms[:, j]
        if self.test_losses is not None:
            out["test_loss"] = self.test_losses
        return out


def _rule_updates(module: Module, x: np.ndarray, y: np.ndarray,
                  rule: LearningRule, eps: float) -> list[np.ndarray]:
    if len(module.weights) == 1:
        (w,) = module.weights
        err = y - w @ x
        return [eps * (err @ x.T)]
    w1, w2 = module.weights
    z = w1 @ x
    y_hat = w2 @ z
    err = y - y_hat
    g1 = w2.T @ err @ x.T
    g2 = err @ z.T
    if rule.eta > 0:
        g1 = g1 + rule.eta * (z @ (x.T - x.T @ w1.T @ w1))
    elif rule.eta < 0:
        row_sq = np.sum(w1 * w1, axis=1)
        scale = 1.0 / (1.0 - row_sq)
        g1 = g1 + rule.eta * (scale[:, None] * (w1 @ x @ x.T))
    if rule.gamma != 0.0:
        g2 = g2 + rule.gamma * ((y @ y.T - y_hat @ y_hat.T) @ w2)
    return [eps * g1, eps * g2]


def train(net: NetworkState, d: Dataset, rule: LearningRule, cfg: TrainConfig,
          svd: AnalyticSVD | None = None,
          train_columns: np.ndarray | None = None,
          test_columns: np.ndarray | None = None,
          frames: Sequence[ModuleFrame] | None = None,
          strength_method: str = "auto") -> TrainingHistory:
    """Full-batch training of (a copy of) ``net``; the input state is untouched.

    Each module updates only from its own reconstruction error.  Non
    gradient-descent rules are defined for deep modules only.  Training
    aborts with DivergenceError when the loss leaves [0, 1e6] or turns
    non-finite.
    """
    if rule.preset != GD and (rule.gamma != 0.0 or rule.eta != 0.0) and net.depth != "deep":
        raise ParameterError("the gamma/eta update family needs a hidden layer")
    net = net.clone()
    if svd is None:
        svd = analytic_svd(d)
    if frames is None:
        frames = architecture_frames(d, net.arch)
    strengths = estimate_initial_strengths(net, frames, strength_method)
    group_cols = {mode_id: cols for mode_id, _lam, _delta, cols in svd.groups()}
    mode_ids = tuple(sorted(group_cols))

    x_full, y_full = d.input, d.output
    if train_columns is not None:
        x, y = x_full[:, train_columns], y_full[:, train_columns]
    else:
        x, y = x_full, y_full
    if test_columns is not None:
        x_te, y_te = x_full[:, test_columns], y_full[:, test_columns]
    n_cols = x.shape[1]

    records = []

    def observe(epoch: int):
        mapping = effective_map(net)
        resid = y - mapping @ x
        loss = float(np.sum(resid * resid) / n_cols)
        diag = np.einsum("ij,ik,kj->j", svd.u_matrix, mapping,
                         svd.v_matrix[:, svd.mode_indices])
        modes = [float(diag[group_cols[m]].mean()) for m in mode_ids]
        nrm = partitioned_norms(mapping, d.layout).as_array()
        test = None
        if test_columns is not None:
            te_resid = y_te - mapping @ x_te
            test = float(np.sum(te_resid * te_resid) / max(x_te.shape[1], 1))
        records.append((epoch, loss, modes, nrm, test))
        return loss

    loss = observe(0)
    for epoch in range(1, cfg.epochs + 1):
        for module in net.modules:
            xm = x[module.in_rows[0]:module.in_rows[1]]
            ym = y[module.out_rows[0]:module.out_rows[1]]
            for w, dw in zip(module.weights, _rule_updates(module, xm, ym, rule, cfg.epsilon)):
                w += dw
        if epoch % cfg.record_every == 0 or epoch == cfg.epochs:
            loss = observe(epoch)
            if not np.isfinite(loss) or loss > 1e6:
                raise DivergenceError(epoch, loss)

    epochs = np.array([r[0] for r in records])
    return TrainingHistory(
        epochs=epochs,
        losses=np.array([r[1] for r in records]),
        mode_values=np.array([r[2] for r in records]),
        mode_ids=mode_ids,
        norms=np.vstack([r[3] for r in records]),
        test_losses=(np.array([r[4] for r in records])
                     if test_columns is not None else None),
        final_state=net,
        initial_strengths=strengths)
