"""
Gaussian maximum-likelihood density-ratio baseline

Each model's training samples are summarized by a single multivariate
Gaussian; log K is the log density ratio of the two fits.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.models.evidence import cholesky, gaussian_log_density
from src.utils.exceptions import InvalidArgumentError, NumericError
from src.utils.logger import get_logger

logger = get_logger(__name__)

JITTER_SCALE = 1e-9
MAX_JITTER_ATTEMPTS = 20


@dataclass
class GaussianFit:
    mean: np.ndarray
    covariance: np.ndarray
    factor: Tuple[np.ndarray, bool]
    jitter: float = 0.0

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def log_density(self, x: np.ndarray):
        """log N(x; mean, covariance) for a vector or each row of a matrix"""
        return gaussian_log_density(x, self.mean, self.factor)


def fit_gaussian_mle(samples: np.ndarray) -> GaussianFit:
    """
    Fit mean and unbiased covariance to a sample matrix

    A diagonal jitter starting at 1e-9 * trace / dim (1e-9 for a zero trace)
    and growing tenfold is added until the Cholesky factorization succeeds.

    Args:
        samples: (n, dim) matrix with n > dim + 1

    Returns:
        GaussianFit
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2:
        raise InvalidArgumentError(f"samples must be a 2-D matrix, got shape {samples.shape}")
    n, dim = samples.shape
    if n <= dim + 1:
        raise InvalidArgumentError(f"need more than {dim + 1} samples to fit a {dim}-D Gaussian, got {n}")

    mean = samples.mean(axis=0)
    covariance = np.atleast_2d(np.cov(samples, rowvar=False, ddof=1))
    try:
        return GaussianFit(mean, covariance, cholesky(covariance))
    except NumericError:
        pass

    trace = float(np.trace(covariance))
    jitter = JITTER_SCALE * trace / dim if trace > 0 else JITTER_SCALE
    for _ in range(MAX_JITTER_ATTEMPTS):
        jittered = covariance + jitter * np.eye(dim)
        try:
            factor = cholesky(jittered)
        except NumericError:
            jitter *= 10.0
            continue
        logger.debug(f"Gaussian fit needed diagonal jitter {jitter:.3e}")
        return GaussianFit(mean, jittered, factor, jitter)
    raise NumericError("covariance is not positive definite even with jitter", location="fit_gaussian_mle")


def baseline_log_k(fit_1: GaussianFit, fit_0: GaussianFit, x: np.ndarray):
    """
    log N(x; fit_1) - log N(x; fit_0)

    Args:
        fit_1: Fit to model-1 samples
        fit_0: Fit to model-0 samples
        x: One vector or an (n, dim) matrix

    Returns:
        float or (n,) array
    """
    if fit_1.dim != fit_0.dim:
        raise InvalidArgumentError(f"fits disagree on dimension: {fit_1.dim} vs {fit_0.dim}")
    return fit_1.log_density(x) - fit_0.log_density(x)
