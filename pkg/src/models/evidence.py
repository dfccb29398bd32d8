"""
Evidence values and Gaussian density helpers shared by the oracles
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from src.utils.exceptions import InvalidArgumentError, NumericError

LOG_2PI = math.log(2.0 * math.pi)


class EvidenceMethod(str, Enum):
    CLOSED_FORM = "closed-form"
    MONTE_CARLO = "monte-carlo"
    QUADRATURE = "quadrature"
    GAUSSIAN_MLE = "gaussian-mle"


EXACT_METHODS = frozenset({EvidenceMethod.CLOSED_FORM, EvidenceMethod.QUADRATURE})


@dataclass(frozen=True)
class EvidenceValue:
    """log p(x | M) with its standard error (zero for exact oracles)"""

    log_evidence: float
    stderr: float
    method: EvidenceMethod

    def __post_init__(self):
        if self.stderr < 0:
            raise InvalidArgumentError("standard error must be non-negative")
        if self.method in EXACT_METHODS and self.stderr != 0.0:
            raise InvalidArgumentError(f"{self.method.value} evidences are exact; stderr must be 0")


def cholesky(covariance: np.ndarray, location: str = "covariance") -> Tuple[np.ndarray, bool]:
    """Lower Cholesky factor via scipy; raises NumericError if not positive definite"""
    try:
        return cho_factor(covariance, lower=True, check_finite=True)
    except (LinAlgError, ValueError) as exc:
        raise NumericError(f"Cholesky factorization failed: {exc}", location=location) from exc


def gaussian_log_density(
    x: np.ndarray, mean: np.ndarray, factor: Tuple[np.ndarray, bool]
) -> np.ndarray:
    """
    log N(x; mean, C) for one vector or each row of a matrix

    Args:
        x: (dim,) or (n, dim)
        mean: (dim,)
        factor: cho_factor output for C

    Returns:
        float for a vector, (n,) array for a matrix
    """
    x_arr = np.asarray(x, dtype=np.float64)
    rows = np.atleast_2d(x_arr)
    chol, _ = factor
    dim = chol.shape[0]
    if rows.shape[1] != dim:
        raise InvalidArgumentError(f"data dimension {rows.shape[1]} != covariance dimension {dim}")
    centered = rows - mean
    solved = cho_solve(factor, centered.T).T
    mahalanobis = np.einsum("ij,ij->i", centered, solved)
    log_det = 2.0 * np.sum(np.log(np.diag(chol)))
    values = -0.5 * (mahalanobis + log_det + dim * LOG_2PI)
    return float(values[0]) if x_arr.ndim == 1 else values
