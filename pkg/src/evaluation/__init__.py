"""
Validation against oracles: RMSE, blind coverage, derived evidences and loss comparison
"""

from .metrics import (
    EstimateSource,
    BayesFactorEstimate,
    rmse_log_k,
    absolute_log_evidence,
    ppt_log_k,
    jeffreys_category,
)
from .coverage import CoverageThresholds, CoverageReport, coverage_test, write_coverage_report
from .loss_comparison import loss_comparison_report

__all__ = [
    "EstimateSource",
    "BayesFactorEstimate",
    "rmse_log_k",
    "absolute_log_evidence",
    "ppt_log_k",
    "jeffreys_category",
    "CoverageThresholds",
    "CoverageReport",
    "coverage_test",
    "write_coverage_report",
    "loss_comparison_report",
]
