"""
Model pairs: two samplers plus an optional exact log K oracle
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Sequence

import numpy as np

from src.models.evidence import EvidenceMethod
from src.models.rastrigin import (
    RastriginModelSpec,
    RastriginVariant,
    rastrigin_log_k_oracle,
    sample_rastrigin_data,
)
from src.models.time_series import (
    TimeSeriesModelSpec,
    TimeSeriesVariant,
    analytic_log_k,
    sample_time_series,
)
from src.utils.exceptions import InvalidArgumentError

FAMILIES = ("time-series", "rastrigin")


class ModelPair(ABC):
    """Label 1 is the first model of the pair, label 0 the second"""

    family: str = ""
    oracle_method: Optional[EvidenceMethod] = None

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @abstractmethod
    def sample(self, label: int, rng_seed: int, count: int) -> np.ndarray:
        """Draw `count` data vectors from model `label`"""

    @property
    def has_oracle(self) -> bool:
        return self.oracle_method is not None

    def log_k(self, x: np.ndarray, columns: Optional[Sequence[int]] = None):
        raise NotImplementedError(f"{self.family} pair has no exact log K oracle")

    @abstractmethod
    def describe(self) -> Dict[str, Any]:
        """Plain-data summary for manifests"""


class TimeSeriesPair(ModelPair):
    """Linear growth plus cosines (M1) against cosines only (M0)"""

    family = "time-series"
    oracle_method = EvidenceMethod.CLOSED_FORM

    def __init__(self, n_dim: int, t: Optional[Sequence[float]] = None):
        self.model_1 = TimeSeriesModelSpec(n_dim, TimeSeriesVariant.M1, None if t is None else tuple(t))
        self.model_0 = self.model_1.with_variant(TimeSeriesVariant.M0)

    @property
    def dim(self) -> int:
        return self.model_1.n_dim

    def sample(self, label: int, rng_seed: int, count: int) -> np.ndarray:
        spec = self.model_1 if label == 1 else self.model_0
        return sample_time_series(spec, rng_seed, count, shard=int(label))

    def log_k(self, x: np.ndarray, columns: Optional[Sequence[int]] = None):
        return analytic_log_k(self.dim, self.model_1.t, x, columns)

    def describe(self) -> Dict[str, Any]:
        return {"family": self.family, "n_dim": self.dim, "t": list(self.model_1.t)}


class RastriginPair(ModelPair):
    """Rastrigin prior (model 1) against its Gaussian envelope (model 0)"""

    family = "rastrigin"
    oracle_method = EvidenceMethod.QUADRATURE

    def __init__(self, n_dim: int, noise_variance: float):
        self.model_1 = RastriginModelSpec(n_dim, noise_variance, RastriginVariant.RASTRIGIN)
        self.model_0 = self.model_1.with_variant(RastriginVariant.GAUSSIAN)

    @property
    def dim(self) -> int:
        return self.model_1.n_dim

    @property
    def noise_variance(self) -> float:
        return self.model_1.noise_variance

    def sample(self, label: int, rng_seed: int, count: int) -> np.ndarray:
        spec = self.model_1 if label == 1 else self.model_0
        return sample_rastrigin_data(spec, rng_seed, count, shard=int(label))

    def log_k(self, x: np.ndarray, columns: Optional[Sequence[int]] = None):
        x_arr = np.asarray(x, dtype=np.float64)
        if x_arr.shape[-1] != (self.dim if columns is None else len(columns)):
            raise InvalidArgumentError(f"data vectors must have length {self.dim}, got {x_arr.shape[-1]}")
        # priors factorize, so a column subset is simply a shorter vector
        return rastrigin_log_k_oracle(x_arr, self.noise_variance)

    def describe(self) -> Dict[str, Any]:
        return {"family": self.family, "n_dim": self.dim, "noise_variance": self.noise_variance}


def build_model_pair(
    family: str,
    n_dim: int,
    noise_variance: Optional[float] = None,
    t: Optional[Sequence[float]] = None,
) -> ModelPair:
    """
    Construct a model pair from config values

    Args:
        family: 'time-series' or 'rastrigin'
        n_dim: Data dimension
        noise_variance: sigma^2 (rastrigin only)
        t: Time-grid override (time-series only)

    Returns:
        ModelPair
    """
    if family == "time-series":
        return TimeSeriesPair(n_dim, t)
    if family == "rastrigin":
        if noise_variance is None:
            raise InvalidArgumentError("rastrigin family needs a noise variance")
        return RastriginPair(n_dim, noise_variance)
    raise InvalidArgumentError(f"unknown model family '{family}', expected one of {FAMILIES}")
