"""Probability that a sample of sign patterns spans its feature space.

Exact values come from exhaustive enumeration of subsets; estimates come
from Monte-Carlo sampling without replacement, matching the sequential
draw-without-return arithmetic used in the analytic argument.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .datasets import ParameterError, sign_patterns

RANK_TOL = 1e-8
_ENUMERATION_CAP = 2_000_000


@dataclass(frozen=True)
class RankTrial:
    n_features: int
    sample_size: int
    trials: int
    seed: int = 0

    def __post_init__(self):
        if self.n_features < 1:
            raise ParameterError("n_features must be at least 1")
        if not 1 <= self.sample_size <= 2 ** self.n_features:
            raise ParameterError(
                f"sample_size must be in [1, {2 ** self.n_features}], got {self.sample_size}")
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")


@dataclass(frozen=True)
class RankEstimate:
    n_features: int
    sample_size: int
    trials: int
    estimate: float
    std_error: float


def estimate_full_rank_probability(trial: RankTrial) -> RankEstimate:
    """Fraction of trials in which ``sample_size`` distinct patterns have
    numerical rank ``n_features``, with the binomial standard error."""
    n, size = trial.n_features, trial.sample_size
    P = 2 ** n
    rng = np.random.default_rng(trial.seed)
    # argsort of uniforms gives a uniform draw without replacement per row
    idx = np.argsort(rng.random((trial.trials, P)), axis=1)[:, :size]
    mats = sign_patterns(n)[:, idx].transpose(1, 0, 2)
    ranks = np.linalg.matrix_rank(mats, tol=RANK_TOL)
    p_hat = float(np.mean(ranks == n))
    se = math.sqrt(p_hat * (1.0 - p_hat) / trial.trials)
    return RankEstimate(n_features=n, sample_size=size, trials=trial.trials,
                        estimate=p_hat, std_error=se)


def enumerate_full_rank_probability(n_features: int, sample_size: int) -> float:
    """Exact fraction of size-``sample_size`` subsets of the 2**n_features
    sign patterns that span the full feature space."""
    if n_features < 1:
        raise ParameterError("n_features must be at least 1")
    P = 2 ** n_features
    if not 1 <= sample_size <= P:
        raise ParameterError(f"sample_size must be in [1, {P}]")
    if math.comb(P, sample_size) > _ENUMERATION_CAP:
        raise ParameterError(
            f"enumeration of C({P}, {sample_size}) subsets is too large")
    patterns = sign_patterns(n_features)
    full = total = 0
    for comb in itertools.combinations(range(P), sample_size):
        total += 1
        if np.linalg.matrix_rank(patterns[:, comb], tol=RANK_TOL) == n_features:
            full += 1
    return full / total
