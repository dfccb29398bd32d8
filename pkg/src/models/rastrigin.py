"""
Rastrigin vs Gaussian prior pair with a quadrature Bayes-factor oracle

Data model x = theta + n, n ~ N(0, sigma^2 I). Priors factorize per dimension:

    Rastrigin:  p(theta_i) ∝ exp(-theta_i^2 / 4 + 10 (cos(2 pi theta_i) - 1))
    Gaussian:   p(theta_i) ∝ exp(-theta_i^2 / 4)

so log K is a sum of 1-D log-evidence differences.
"""

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from src.utils.exceptions import InvalidArgumentError, NumericError
from src.utils.logger import get_logger
from src.utils.seeding import STREAM_SAMPLE, make_rng

logger = get_logger(__name__)

QUADRATURE_HALF_WIDTH = 12.0
QUADRATURE_TOLERANCE = 1e-10
OSCILLATION_STRENGTH = 10.0
PROPOSAL_STD = math.sqrt(2.0)  # N(0, 2) has density ∝ exp(-theta^2 / 4)


class RastriginVariant(str, Enum):
    RASTRIGIN = "rastrigin"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class RastriginModelSpec:
    n_dim: int
    noise_variance: float
    variant: RastriginVariant = RastriginVariant.RASTRIGIN

    def __post_init__(self):
        if int(self.n_dim) < 1:
            raise InvalidArgumentError(f"n must be >= 1, got {self.n_dim}")
        if not (self.noise_variance > 0 and math.isfinite(self.noise_variance)):
            raise InvalidArgumentError(f"noise variance must be > 0, got {self.noise_variance}")
        object.__setattr__(self, "variant", RastriginVariant(self.variant))

    def with_variant(self, variant: Union[str, RastriginVariant]) -> "RastriginModelSpec":
        return RastriginModelSpec(self.n_dim, self.noise_variance, RastriginVariant(variant))


def _oscillation(theta):
    return OSCILLATION_STRENGTH * (np.cos(2.0 * np.pi * theta) - 1.0)


def rastrigin_log_prior_unnorm(theta, variant: Union[str, RastriginVariant]):
    """
    Log of the unnormalized 1-D prior density

    Args:
        theta: Parameter value(s), finite
        variant: 'rastrigin' or 'gaussian'

    Returns:
        float or array shaped like theta
    """
    variant = RastriginVariant(variant)
    theta_arr = np.asarray(theta, dtype=np.float64)
    if not np.all(np.isfinite(theta_arr)):
        raise InvalidArgumentError("theta must be finite")
    value = -0.25 * theta_arr ** 2
    if variant is RastriginVariant.RASTRIGIN:
        value = value + _oscillation(theta_arr)
    return float(value) if theta_arr.ndim == 0 else value


def sample_rastrigin_prior(
    rng: np.random.Generator, size: int, variant: Union[str, RastriginVariant]
) -> Tuple[np.ndarray, int]:
    """
    Draw prior samples by rejection from the N(0, 2) envelope

    The envelope is exactly the non-oscillatory factor, so a proposal is
    accepted with probability exp(10 (cos(2 pi theta) - 1)) <= 1.

    Returns:
        (samples of length size, number of proposals used)
    """
    variant = RastriginVariant(variant)
    if variant is RastriginVariant.GAUSSIAN:
        return rng.normal(0.0, PROPOSAL_STD, size), size

    kept = []
    n_kept = 0
    n_proposed = 0
    while n_kept < size:
        block = max(1024, int(1.2 * (size - n_kept) / 0.12))
        proposals = rng.normal(0.0, PROPOSAL_STD, block)
        log_u = np.log(rng.random(block))
        accepted = proposals[log_u <= _oscillation(proposals)]
        kept.append(accepted)
        n_kept += accepted.size
        n_proposed += block
    samples = np.concatenate(kept)[:size]
    logger.debug(f"rejection sampler: {size} accepted from {n_proposed} proposals")
    return samples, n_proposed


def rastrigin_acceptance_rate(n_proposals: int, rng_seed: int) -> float:
    """Fraction of envelope proposals accepted by the Rastrigin rejection step"""
    if n_proposals < 1:
        raise InvalidArgumentError(f"n_proposals must be >= 1, got {n_proposals}")
    rng = make_rng(rng_seed, STREAM_SAMPLE)
    proposals = rng.normal(0.0, PROPOSAL_STD, n_proposals)
    log_u = np.log(rng.random(n_proposals))
    return float(np.mean(log_u <= _oscillation(proposals)))


def sample_rastrigin_data(
    spec: RastriginModelSpec, rng_seed: int, count: int, shard: int = 0
) -> np.ndarray:
    """
    Draw data vectors x = theta + sigma z

    Args:
        spec: Rastrigin-family model
        rng_seed: Seed for this draw
        count: Number of rows (>= 1)
        shard: Sub-stream index so several draws can share one seed

    Returns:
        (count, n) data matrix
    """
    if count < 1:
        raise InvalidArgumentError(f"count must be >= 1, got {count}")
    rng = make_rng(rng_seed, STREAM_SAMPLE, shard)
    theta, _ = sample_rastrigin_prior(rng, count * spec.n_dim, spec.variant)
    noise = rng.standard_normal(count * spec.n_dim) * math.sqrt(spec.noise_variance)
    return (theta + noise).reshape(count, spec.n_dim)


def _integrate(integrand, points) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, abserr = quad(
                integrand,
                -QUADRATURE_HALF_WIDTH,
                QUADRATURE_HALF_WIDTH,
                points=points,
                epsabs=QUADRATURE_TOLERANCE,
                epsrel=QUADRATURE_TOLERANCE,
                limit=500,
            )
        except IntegrationWarning as exc:
            raise NumericError(f"quadrature did not converge: {exc}", location="rastrigin oracle") from exc
    if not (value > 0 and math.isfinite(value)):
        raise NumericError(f"quadrature returned {value}", location="rastrigin oracle")
    return value


def _breakpoints(*extra: float) -> list:
    grid = set(float(k) for k in range(-int(QUADRATURE_HALF_WIDTH) + 1, int(QUADRATURE_HALF_WIDTH)))
    grid.update(p for p in extra if abs(p) < QUADRATURE_HALF_WIDTH)
    return sorted(grid)


@lru_cache(maxsize=None)
def prior_log_normalizer(variant: RastriginVariant) -> float:
    """log of the integral of the unnormalized prior over the quadrature window"""
    variant = RastriginVariant(variant)
    value = _integrate(lambda t: math.exp(rastrigin_log_prior_unnorm(t, variant)), _breakpoints())
    return math.log(value)


@lru_cache(maxsize=65536)
def _log_evidence_1d(abs_x: float, noise_variance: float, variant: RastriginVariant) -> float:
    inv_two_var = 0.5 / noise_variance
    log_norm = -0.5 * math.log(2.0 * math.pi * noise_variance)

    def integrand(t: float) -> float:
        return math.exp(log_norm - inv_two_var * (abs_x - t) ** 2 + rastrigin_log_prior_unnorm(t, variant))

    width = math.sqrt(noise_variance)
    value = _integrate(integrand, _breakpoints(abs_x, abs_x - width, abs_x + width))
    return math.log(value) - prior_log_normalizer(variant)


def rastrigin_log_evidence_1d(x_i: float, noise_variance: float, variant: Union[str, RastriginVariant]) -> float:
    """
    log p(x_i | M) for one data component

    Prior and noise are both even, so the value depends on |x_i| only; the
    memo is keyed on |x_i| and parity holds exactly.
    """
    if noise_variance <= 0:
        raise InvalidArgumentError(f"noise variance must be > 0, got {noise_variance}")
    return _log_evidence_1d(abs(float(x_i)), float(noise_variance), RastriginVariant(variant))


def rastrigin_log_k_oracle(x, noise_variance: float):
    """
    Quadrature log K of the Rastrigin prior over the Gaussian prior

    Args:
        x: One data vector or an (n_rows, n) matrix
        noise_variance: sigma^2 > 0

    Returns:
        float for a vector, (n_rows,) array for a matrix
    """
    if not noise_variance > 0:
        raise InvalidArgumentError(f"noise variance must be > 0, got {noise_variance}")
    x_arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x_arr)):
        raise InvalidArgumentError("data must be finite")
    rows = np.atleast_2d(x_arr)
    values = np.array(
        [
            sum(
                rastrigin_log_evidence_1d(v, noise_variance, RastriginVariant.RASTRIGIN)
                - rastrigin_log_evidence_1d(v, noise_variance, RastriginVariant.GAUSSIAN)
                for v in row
            )
            for row in rows
        ]
    )
    return float(values[0]) if x_arr.ndim == 1 else values
