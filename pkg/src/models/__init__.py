"""
Generative model pairs and exact evidence oracles
"""

from .evidence import EvidenceMethod, EvidenceValue, gaussian_log_density
from .time_series import (
    TimeSeriesModelSpec,
    TimeSeriesVariant,
    default_time_grid,
    build_design_matrix,
    noise_covariance,
    marginal_covariance,
    sample_time_series,
    analytic_log_evidence,
    analytic_log_k,
    log_evidence_ratio,
    analytic_conditional_log_evidence,
    mc_log_evidence,
)
from .rastrigin import (
    RastriginModelSpec,
    RastriginVariant,
    rastrigin_log_prior_unnorm,
    rastrigin_acceptance_rate,
    rastrigin_log_evidence_1d,
    rastrigin_log_k_oracle,
    sample_rastrigin_data,
    sample_rastrigin_prior,
)
from .baseline import GaussianFit, fit_gaussian_mle, baseline_log_k
from .pairs import ModelPair, TimeSeriesPair, RastriginPair, build_model_pair

__all__ = [
    "EvidenceMethod",
    "EvidenceValue",
    "gaussian_log_density",
    "TimeSeriesModelSpec",
    "TimeSeriesVariant",
    "default_time_grid",
    "build_design_matrix",
    "noise_covariance",
    "marginal_covariance",
    "sample_time_series",
    "analytic_log_evidence",
    "analytic_log_k",
    "log_evidence_ratio",
    "analytic_conditional_log_evidence",
    "mc_log_evidence",
    "RastriginModelSpec",
    "RastriginVariant",
    "rastrigin_log_prior_unnorm",
    "rastrigin_acceptance_rate",
    "rastrigin_log_evidence_1d",
    "rastrigin_log_k_oracle",
    "sample_rastrigin_data",
    "sample_rastrigin_prior",
    "GaussianFit",
    "fit_gaussian_mle",
    "baseline_log_k",
    "ModelPair",
    "TimeSeriesPair",
    "RastriginPair",
    "build_model_pair",
]
