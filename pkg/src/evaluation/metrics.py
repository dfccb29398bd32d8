"""
Scalar metrics on log Bayes factors
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from src.utils.exceptions import InvalidArgumentError

ArrayLike = Union[float, np.ndarray]

# |log K| band edges for the Jeffreys-style interpretation
JEFFREYS_EDGES = (1.0, 2.5, 5.0)
JEFFREYS_LABELS = ("inconclusive", "weak", "moderate", "strong")


class EstimateSource(str, Enum):
    ENSEMBLE = "ensemble"
    ORACLE = "oracle"
    BASELINE = "baseline"


@dataclass(frozen=True)
class BayesFactorEstimate:
    log_k: float
    stderr: float
    source: EstimateSource

    @property
    def saturated(self) -> bool:
        """True when the decoded value is not finite"""
        return not math.isfinite(self.log_k)

    @property
    def category(self) -> str:
        return jeffreys_category(self.log_k)

    def describe(self) -> str:
        favored = "model 1" if self.log_k > 0 else "model 0"
        return (
            f"log K = {self.log_k:.4f} +/- {self.stderr:.4f} ({self.source.value}); "
            f"{self.category} evidence for {favored}"
        )


def rmse_log_k(predicted, truth) -> float:
    """
    Root-mean-square error between estimated and true log K

    Args:
        predicted: Estimates
        truth: Reference values, same length

    Returns:
        sqrt(mean((predicted - truth)^2))
    """
    predicted = np.asarray(predicted, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if predicted.shape != truth.shape:
        raise InvalidArgumentError(f"length mismatch: {predicted.size} predictions vs {truth.size} truths")
    if predicted.size == 0:
        raise InvalidArgumentError("rmse needs at least one value")
    return float(np.sqrt(np.mean((predicted - truth) ** 2)))


def _check_finite(*values) -> None:
    for value in values:
        if not np.all(np.isfinite(value)):
            raise InvalidArgumentError("inputs must be finite")


def absolute_log_evidence(log_k: ArrayLike, log_z_reference: ArrayLike) -> ArrayLike:
    """log p(x | M1) from log K and a known log p(x | M0)"""
    _check_finite(log_k, log_z_reference)
    return log_k + log_z_reference


def ppt_log_k(log_k_full: ArrayLike, log_k_subset: ArrayLike) -> ArrayLike:
    """
    Posterior-predictive log odds of held-out data given the observed part

    log K(x) - log K(x_0); an empty observed part has log K(x_0) = 0.
    """
    _check_finite(log_k_full, log_k_subset)
    return log_k_full - log_k_subset


def jeffreys_category(log_k: float) -> str:
    """Interpretation band for |log K|"""
    magnitude = abs(float(log_k))
    for edge, label in zip(JEFFREYS_EDGES, JEFFREYS_LABELS):
        if magnitude < edge:
            return label
    return JEFFREYS_LABELS[-1]
