"""
Nested linear-Gaussian time-series models

    x = A theta + n,  theta ~ N(0, I),  n ~ N(0, Sigma)

M1 has a linear-growth column A[:, 0] = 2 t followed by cosine columns
A[j, i] = cos((i - 1/2) t_j), i = 1..N-1. M0 drops the growth column (theta_0 = 0).
Both evidences are zero-mean Gaussians with covariance Sigma + A A^T.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import cho_solve
from scipy.special import logsumexp

from src.models.evidence import (
    LOG_2PI,
    EvidenceMethod,
    EvidenceValue,
    cholesky,
    gaussian_log_density,
)
from src.utils.exceptions import DiagnosticError, InvalidArgumentError
from src.utils.logger import get_logger
from src.utils.seeding import STREAM_ORACLE, STREAM_SAMPLE, make_rng

logger = get_logger(__name__)

_MC_CHUNK = 100_000


class TimeSeriesVariant(str, Enum):
    M1 = "M1"  # with linear-growth column
    M0 = "M0"  # growth column removed


def default_time_grid(n_dim: int) -> np.ndarray:
    """t_j = j / (N - 1), j = 0..N-1"""
    return np.linspace(0.0, 1.0, n_dim)


@dataclass(frozen=True)
class TimeSeriesModelSpec:
    n_dim: int
    variant: TimeSeriesVariant = TimeSeriesVariant.M1
    t: Optional[tuple] = field(default=None)

    def __post_init__(self):
        if int(self.n_dim) < 2:
            raise InvalidArgumentError(f"time-series models need N >= 2, got {self.n_dim}")
        object.__setattr__(self, "variant", TimeSeriesVariant(self.variant))
        grid = default_time_grid(self.n_dim) if self.t is None else np.asarray(self.t, dtype=np.float64)
        if grid.shape != (self.n_dim,):
            raise InvalidArgumentError(f"t grid must have {self.n_dim} points, got {grid.shape}")
        if np.any(np.diff(grid) <= 0):
            raise InvalidArgumentError("t grid must be strictly increasing")
        object.__setattr__(self, "t", tuple(float(v) for v in grid))

    @property
    def time_grid(self) -> np.ndarray:
        return np.asarray(self.t)

    @property
    def n_params(self) -> int:
        return self.n_dim if self.variant is TimeSeriesVariant.M1 else self.n_dim - 1

    def with_variant(self, variant: Union[str, TimeSeriesVariant]) -> "TimeSeriesModelSpec":
        return TimeSeriesModelSpec(self.n_dim, TimeSeriesVariant(variant), self.t)


def build_design_matrix(spec: TimeSeriesModelSpec) -> np.ndarray:
    """
    Design matrix A for the model's variant

    Args:
        spec: Time-series model

    Returns:
        (N, N) for M1, (N, N-1) for M0
    """
    t = spec.time_grid
    frequencies = np.arange(1, spec.n_dim) - 0.5
    cosines = np.cos(np.outer(t, frequencies))
    if spec.variant is TimeSeriesVariant.M0:
        return cosines
    return np.column_stack([2.0 * t, cosines])


def noise_covariance(n_dim: int) -> np.ndarray:
    """
    Diagonal of the heteroscedastic noise covariance

    sqrt(Sigma_kk) = sqrt(N/100) * ((k + 5/2) * 8/5)^2, k = 0..N-1
    """
    if int(n_dim) < 1:
        raise InvalidArgumentError(f"N must be >= 1, got {n_dim}")
    k = np.arange(n_dim, dtype=np.float64)
    root = math.sqrt(n_dim / 100.0) * ((k + 2.5) * 1.6) ** 2
    return root ** 2


def marginal_covariance(spec: TimeSeriesModelSpec, columns: Optional[Sequence[int]] = None) -> np.ndarray:
    """C_Z = Sigma + A A^T, optionally restricted to a subset of data columns"""
    design = build_design_matrix(spec)
    cov = np.diag(noise_covariance(spec.n_dim)) + design @ design.T
    if columns is not None:
        idx = np.asarray(columns, dtype=int)
        cov = cov[np.ix_(idx, idx)]
    return cov


def sample_time_series(
    spec: TimeSeriesModelSpec, rng_seed: int, count: int, shard: int = 0
) -> np.ndarray:
    """
    Draw data vectors x = A theta + n; theta is discarded

    Args:
        spec: Time-series model
        rng_seed: Seed for this draw
        count: Number of rows (>= 1)
        shard: Sub-stream index so several draws can share one seed

    Returns:
        (count, N) data matrix
    """
    if count < 1:
        raise InvalidArgumentError(f"count must be >= 1, got {count}")
    rng = make_rng(rng_seed, STREAM_SAMPLE, shard)
    design = build_design_matrix(spec)
    theta = rng.standard_normal((count, design.shape[1]))
    noise = rng.standard_normal((count, spec.n_dim)) * np.sqrt(noise_covariance(spec.n_dim))
    return theta @ design.T + noise


def _check_data(spec: TimeSeriesModelSpec, x: np.ndarray, columns) -> np.ndarray:
    x_arr = np.asarray(x, dtype=np.float64)
    expected = spec.n_dim if columns is None else len(columns)
    if x_arr.shape[-1] != expected:
        raise InvalidArgumentError(f"data vectors must have length {expected}, got {x_arr.shape[-1]}")
    return x_arr


def analytic_log_evidence(
    spec: TimeSeriesModelSpec, x: np.ndarray, columns: Optional[Sequence[int]] = None
) -> Union[EvidenceValue, np.ndarray]:
    """
    Closed-form log p(x | M) = log N(x; 0, Sigma + A A^T)

    Args:
        spec: Time-series model
        x: One data vector, or an (n, N) matrix of them
        columns: Evaluate the marginal evidence of this subset of data columns

    Returns:
        EvidenceValue for a single vector; (n,) array of log evidences for a matrix
    """
    x_arr = _check_data(spec, x, columns)
    cov = marginal_covariance(spec, columns)
    factor = cholesky(cov, location=f"C_Z({spec.variant.value})")
    values = gaussian_log_density(x_arr, np.zeros(cov.shape[0]), factor)
    if x_arr.ndim == 1:
        return EvidenceValue(values, 0.0, EvidenceMethod.CLOSED_FORM)
    return values


def _log_evidence_values(spec, x, columns=None):
    result = analytic_log_evidence(spec, x, columns)
    return result.log_evidence if isinstance(result, EvidenceValue) else result


def log_evidence_ratio(
    numerator: TimeSeriesModelSpec,
    denominator: TimeSeriesModelSpec,
    x: np.ndarray,
    columns: Optional[Sequence[int]] = None,
):
    """log p(x | numerator) - log p(x | denominator) for any two time-series specs"""
    return _log_evidence_values(numerator, x, columns) - _log_evidence_values(denominator, x, columns)


def analytic_log_k(
    n_dim: int,
    t: Optional[Sequence[float]],
    x: np.ndarray,
    columns: Optional[Sequence[int]] = None,
):
    """
    Exact log Bayes factor of M1 (with growth) over M0 (without)

    Args:
        n_dim: Data dimension N
        t: Time grid (None for the default grid)
        x: One vector or an (n, N) matrix
        columns: Restrict both evidences to a subset of data columns

    Returns:
        float or (n,) array
    """
    m1 = TimeSeriesModelSpec(n_dim, TimeSeriesVariant.M1, None if t is None else tuple(t))
    return log_evidence_ratio(m1, m1.with_variant(TimeSeriesVariant.M0), x, columns)


def analytic_conditional_log_evidence(
    spec: TimeSeriesModelSpec, x: np.ndarray, observed_columns: Sequence[int]
):
    """
    log p(x_1 | x_0, M) where x_0 are the observed columns and x_1 the rest

    Uses the Gaussian conditional: mean C_10 C_00^-1 x_0, covariance C_11 - C_10 C_00^-1 C_01.

    Returns:
        float for a single vector, (n,) array for a matrix
    """
    x_arr = _check_data(spec, x, None)
    rows = np.atleast_2d(x_arr)
    observed = np.asarray(observed_columns, dtype=int)
    held_out = np.setdiff1d(np.arange(spec.n_dim), observed)
    cov = marginal_covariance(spec)
    if observed.size == 0:
        values = gaussian_log_density(rows, np.zeros(spec.n_dim), cholesky(cov))
        return float(values[0]) if x_arr.ndim == 1 else values

    c00 = cov[np.ix_(observed, observed)]
    c10 = cov[np.ix_(held_out, observed)]
    c11 = cov[np.ix_(held_out, held_out)]
    factor00 = cholesky(c00, location="C_00")
    gain = cho_solve(factor00, c10.T).T  # C_10 C_00^-1
    cond_cov = c11 - gain @ c10.T
    cond_cov = 0.5 * (cond_cov + cond_cov.T)
    factor = cholesky(cond_cov, location="conditional covariance")
    chol, _ = factor
    centered = rows[:, held_out] - rows[:, observed] @ gain.T
    solved = cho_solve(factor, centered.T).T
    values = -0.5 * (
        np.einsum("ij,ij->i", centered, solved)
        + 2.0 * np.sum(np.log(np.diag(chol)))
        + held_out.size * LOG_2PI
    )
    return float(values[0]) if x_arr.ndim == 1 else values


def mc_log_evidence(
    spec: TimeSeriesModelSpec,
    x: np.ndarray,
    n_draws: int,
    rng_seed: int,
    design: Optional[np.ndarray] = None,
) -> EvidenceValue:
    """
    Brute-force Monte Carlo estimate of log p(x | M)

    log-mean-exp over prior draws of log N(x; A theta, Sigma); the standard
    error follows from the delta method on the sample variance of the weights.

    Args:
        spec: Time-series model
        x: One data vector
        n_draws: Number of prior draws (>= 1000)
        rng_seed: Seed for the draws
        design: Override the design matrix (e.g. a degenerate A = 0)

    Returns:
        EvidenceValue tagged monte-carlo
    """
    if n_draws < 1000:
        raise InvalidArgumentError(f"n_draws must be >= 1000, got {n_draws}")
    x_arr = _check_data(spec, x, None)
    if x_arr.ndim != 1:
        raise InvalidArgumentError("mc_log_evidence takes a single data vector")
    design = build_design_matrix(spec) if design is None else np.asarray(design, dtype=np.float64)
    variance = noise_covariance(spec.n_dim)
    log_norm = -0.5 * (np.sum(np.log(variance)) + spec.n_dim * LOG_2PI)
    rng = make_rng(rng_seed, STREAM_ORACLE)

    log_weights = np.empty(n_draws)
    for start in range(0, n_draws, _MC_CHUNK):
        stop = min(start + _MC_CHUNK, n_draws)
        theta = rng.standard_normal((stop - start, design.shape[1]))
        residual = x_arr - theta @ design.T
        log_weights[start:stop] = log_norm - 0.5 * np.sum(residual ** 2 / variance, axis=1)

    peak = np.max(log_weights)
    if not np.isfinite(peak):
        raise DiagnosticError(
            "all Monte Carlo likelihood weights underflowed; use more draws or a smaller N"
        )
    weights = np.exp(log_weights - peak)
    mean_weight = weights.mean()
    estimate = peak + math.log(mean_weight)
    stderr = float(np.std(weights, ddof=1) / (math.sqrt(n_draws) * mean_weight))
    logger.debug(
        f"MC evidence N={spec.n_dim} {spec.variant.value}: {estimate:.6f} +/- {stderr:.2e} "
        f"(logsumexp check {logsumexp(log_weights) - math.log(n_draws):.6f})"
    )
    return EvidenceValue(float(estimate), stderr, EvidenceMethod.MONTE_CARLO)
