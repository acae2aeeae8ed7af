"""Compositional dataset space, exact linear-network learning dynamics, and
module-specialization experiments."""

from .architectures import Architecture
from .datasets import (BlockLayout, CovariancePair, Dataset, DatasetParams,
                       ParameterError, build_dataset, covariances, load_dataset,
                       save_dataset, sign_patterns, split)
from .metrics import (DeviationReport, NormPartition, deviation,
                      empirical_mode_values, partitioned_norms,
                      systematicity_verdict)
from .networks import (DivergenceError, LearningRule, NetworkState, TrainConfig,
                       TrainingHistory, effective_map, estimate_initial_strengths,
                       init_network, train)
from .rank import (RankEstimate, RankTrial, enumerate_full_rank_probability,
                   estimate_full_rank_probability)
from .theory import (AnalyticSVD, ConsistencyError, ModeSpectrum, NormCurves,
                     TrajectoryConfig, analytic_svd, architecture_frames,
                     deep_mode_value, exact_rank_probability_3features,
                     mode_spectrum, predicted_mode_curves, predicted_norms,
                     shallow_mode_value)
from .experiments import (ExperimentConfig, FIG3_PARAMS, list_presets, run,
                          run_preset)

__all__ = [
    "Architecture", "AnalyticSVD", "BlockLayout", "ConsistencyError",
    "CovariancePair", "Dataset", "DatasetParams", "DeviationReport",
    "DivergenceError", "ExperimentConfig", "FIG3_PARAMS", "LearningRule",
    "ModeSpectrum", "NetworkState", "NormCurves", "NormPartition",
    "ParameterError", "RankEstimate", "RankTrial", "TrainConfig",
    "TrainingHistory", "TrajectoryConfig", "analytic_svd",
    "architecture_frames", "build_dataset", "covariances", "deep_mode_value",
    "deviation", "effective_map", "empirical_mode_values",
    "enumerate_full_rank_probability", "estimate_full_rank_probability",
    "estimate_initial_strengths", "exact_rank_probability_3features",
    "init_network", "list_presets", "load_dataset", "mode_spectrum",
    "partitioned_norms", "predicted_mode_curves", "predicted_norms", "run",
    "run_preset", "save_dataset", "shallow_mode_value", "sign_patterns",
    "split", "systematicity_verdict", "train",
]

__version__ = "0.1.0"
