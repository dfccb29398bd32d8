"""
Labelled training data: generation, sign-flip augmentation and the EVDS file format

EVDS layout (little-endian):
    b"EVDS" | u32 version | u64 n_samples | u32 dim
    | f64[n_samples * dim] row-major data | u8[n_samples] labels in {0, 1}
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from src.losses import ModelPriorRatio
from src.models import ModelPair
from src.utils.exceptions import InvalidArgumentError
from src.utils.logger import get_logger
from src.utils.seeding import STREAM_SHUFFLE, make_rng

logger = get_logger(__name__)

MAGIC = b"EVDS"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<IQI")
_F64 = np.dtype("<f8")


@dataclass
class Dataset:
    """Data matrix with one model label (1 or 0) per row"""

    data: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.labels = np.asarray(self.labels).astype(np.uint8)
        if self.data.ndim != 2:
            raise InvalidArgumentError(f"data must be 2-D, got shape {self.data.shape}")
        if self.labels.shape != (self.data.shape[0],):
            raise InvalidArgumentError(
                f"{self.data.shape[0]} rows but {self.labels.shape[0]} labels"
            )
        if not np.all(self.labels <= 1):
            raise InvalidArgumentError("labels must be 0 or 1")

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def label_counts(self) -> Tuple[int, int]:
        """(rows labelled 1, rows labelled 0)"""
        n1 = int(self.labels.sum())
        return n1, len(self) - n1

    @property
    def label_fractions(self) -> Dict[int, float]:
        n1, n0 = self.label_counts
        total = max(len(self), 1)
        return {1: n1 / total, 0: n0 / total}

    @property
    def is_balanced(self) -> bool:
        n1, n0 = self.label_counts
        return n1 == n0

    def prior_ratio(self, allow_imbalance: bool = False) -> ModelPriorRatio:
        """
        Model prior ratio implied by the label balance

        Balanced data decodes with zero offset. Imbalanced data is only
        accepted when the caller declares it, and then contributes
        log(n1 / n0).
        """
        if self.is_balanced:
            return ModelPriorRatio(0.0)
        if not allow_imbalance:
            n1, n0 = self.label_counts
            raise InvalidArgumentError(
                f"dataset is imbalanced ({n1} vs {n0}); declare the prior ratio to train on it"
            )
        return ModelPriorRatio.from_counts(*self.label_counts)

    def take(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.data[indices], self.labels[indices])

    def select_columns(self, columns: Optional[Sequence[int]]) -> "Dataset":
        """Restrict every row to a subset of data columns (None keeps all)"""
        if columns is None:
            return self
        idx = np.asarray(columns, dtype=int)
        if idx.size == 0 or np.any(idx < 0) or np.any(idx >= self.dim):
            raise InvalidArgumentError(f"columns {list(idx)} out of range for dimension {self.dim}")
        return Dataset(self.data[:, idx], self.labels)


def generate_training_set(pair: ModelPair, n_per_model: int, seed: int) -> Dataset:
    """
    Draw a balanced labelled dataset from a model pair

    Args:
        pair: Model pair; its first model gets label 1
        n_per_model: Rows drawn from each model
        seed: Run seed for sampling and the shuffle

    Returns:
        Shuffled Dataset with 2 * n_per_model rows
    """
    if n_per_model < 1:
        raise InvalidArgumentError(f"n_per_model must be >= 1, got {n_per_model}")
    x1 = pair.sample(1, seed, n_per_model)
    x0 = pair.sample(0, seed, n_per_model)
    data = np.vstack([x1, x0])
    labels = np.concatenate([np.ones(n_per_model, np.uint8), np.zeros(n_per_model, np.uint8)])
    order = make_rng(seed, STREAM_SHUFFLE).permutation(data.shape[0])
    logger.info(f"Generated {data.shape[0]} {pair.family} samples (dim {pair.dim}, seed {seed})")
    return Dataset(data[order], labels[order])


def augment_sign_flip(batch: np.ndarray, labels: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Append the negated batch; labels are duplicated unchanged"""
    batch = np.asarray(batch, dtype=np.float64)
    labels = np.asarray(labels)
    return np.vstack([batch, -batch]), np.concatenate([labels, labels])


def write_dataset(dataset: Dataset, path: Union[str, Path]) -> Path:
    """Write an EVDS file; parent directories are created"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(_HEADER.pack(FORMAT_VERSION, len(dataset), dataset.dim))
        f.write(np.ascontiguousarray(dataset.data, dtype=_F64).tobytes())
        f.write(dataset.labels.astype(np.uint8).tobytes())
    return path


def read_dataset(path: Union[str, Path]) -> Dataset:
    """Read an EVDS file written by write_dataset"""
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise InvalidArgumentError(f"{path} is not an EVDS dataset")
        header = f.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise InvalidArgumentError(f"{path}: truncated header")
        version, n_samples, dim = _HEADER.unpack(header)
        if version != FORMAT_VERSION:
            raise InvalidArgumentError(f"{path}: unsupported dataset version {version}")
        n_bytes = n_samples * dim * _F64.itemsize
        raw = f.read(n_bytes)
        labels = f.read(n_samples)
        if len(raw) != n_bytes or len(labels) != n_samples:
            raise InvalidArgumentError(f"{path}: truncated body")
        if f.read(1):
            raise InvalidArgumentError(f"{path}: trailing bytes")
    data = np.frombuffer(raw, dtype=_F64).astype(np.float64).reshape(n_samples, dim)
    return Dataset(data, np.frombuffer(labels, dtype=np.uint8).copy())
