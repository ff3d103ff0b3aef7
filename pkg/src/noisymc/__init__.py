"""Noisy low-rank matrix completion under general sampling distributions."""

from .estimators import (
    EstimatorConfig,
    SolveResult,
    fit,
    kkt_residual,
    lambda_known_variance,
    lambda_sqrt,
    prox_box_nuclear,
    svt,
)
from .experiments import ExperimentConfig, run_bound_verification, run_rate_experiment
from .sampling import (
    MatrixDims,
    NoiseModel,
    ObservationSet,
    SamplingDistribution,
    build_distribution,
    generate_low_rank,
    regularity_constants,
    sample_observations,
)

__version__ = "0.1.0"

__all__ = [
    "EstimatorConfig",
    "SolveResult",
    "fit",
    "kkt_residual",
    "lambda_known_variance",
    "lambda_sqrt",
    "prox_box_nuclear",
    "svt",
    "ExperimentConfig",
    "run_bound_verification",
    "run_rate_experiment",
    "MatrixDims",
    "NoiseModel",
    "ObservationSet",
    "SamplingDistribution",
    "build_distribution",
    "generate_low_rank",
    "regularity_constants",
    "sample_observations",
]
