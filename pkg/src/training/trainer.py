"""
Mini-batch training of a single Evidence Network with early stopping
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from sklearn.model_selection import train_test_split

from src.losses import LossSpec, batch_loss, output_link, output_link_grad
from src.network import (
    Mode,
    NetworkGradients,
    NetworkParameters,
    adam_step,
    backward,
    copy_network,
    forward,
    init_optimizer,
)
from src.training.dataset import Dataset, augment_sign_flip
from src.utils.exceptions import InvalidArgumentError, NumericError, TrainingError
from src.utils.logger import get_logger
from src.utils.seeding import STREAM_SHUFFLE, STREAM_SPLIT, make_rng

logger = get_logger(__name__)


class TrainConfig(BaseModel):
    """Settings under the `train.*` config section"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    batch_size: int = Field(128, ge=2)
    max_epochs: int = Field(200, ge=1)
    patience: int = Field(10, ge=1)
    validation_fraction: float = Field(0.1, gt=0.0, lt=1.0)
    learning_rate: float = Field(1e-4, gt=0.0)
    decay_rate: float = Field(0.95, gt=0.0, le=1.0)
    augment_sign_flip: bool = True
    standardize_inputs: bool = True
    allow_imbalance: bool = False
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _patience_within_epochs(self) -> "TrainConfig":
        if self.patience > self.max_epochs:
            raise ValueError(f"patience ({self.patience}) exceeds max_epochs ({self.max_epochs})")
        return self


@dataclass
class TrainingHistory:
    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    learning_rate: List[float] = field(default_factory=list)
    best_epoch: int = -1
    initial_val_loss: float = math.nan

    @property
    def best_val_loss(self) -> float:
        return self.val_loss[self.best_epoch] if self.best_epoch >= 0 else math.nan

    @property
    def n_epochs(self) -> int:
        return len(self.val_loss)

    def record(self, train_loss: float, val_loss: float, learning_rate: float) -> bool:
        """Append one epoch; returns True if it is the new best"""
        self.train_loss.append(train_loss)
        self.val_loss.append(val_loss)
        self.learning_rate.append(learning_rate)
        if self.best_epoch < 0 or val_loss < self.best_val_loss:
            self.best_epoch = len(self.val_loss) - 1
            return True
        return False

    def to_frame(self) -> pd.DataFrame:
        """Columns epoch, train_loss, val_loss, lr"""
        return pd.DataFrame({
            "epoch": np.arange(self.n_epochs),
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "lr": self.learning_rate,
        })

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "TrainingHistory":
        history = cls()
        for row in frame.itertuples(index=False):
            history.record(float(row.train_loss), float(row.val_loss), float(row.lr))
        return history


def batch_objective(
    net: NetworkParameters,
    loss: LossSpec,
    batch: np.ndarray,
    labels: np.ndarray,
    mode: Mode = Mode.TRAINING,
) -> Tuple[float, NetworkGradients, bool]:
    """
    Mean designer loss of a batch and its parameter gradients

    The raw output passes through the loss's output link before the loss;
    the chain rule through the link is applied here.

    Returns:
        (mean loss, gradients, saturation flag)
    """
    raw, trace = forward(net, batch, mode)
    result = batch_loss(loss, output_link(loss, raw), labels)
    output_grads = result.grads * output_link_grad(loss, raw)
    return result.mean, backward(net, trace, output_grads), result.saturated


def evaluate_loss(net: NetworkParameters, loss: LossSpec, dataset: Dataset) -> float:
    """Mean loss over a dataset in inference mode"""
    raw, _ = forward(net, dataset.data, Mode.INFERENCE)
    return batch_loss(loss, output_link(loss, raw), dataset.labels).mean


def split_dataset(dataset: Dataset, validation_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Label-stratified train/validation split keyed by the run seed"""
    random_state = int(make_rng(seed, STREAM_SPLIT).integers(2 ** 31 - 1))
    indices = np.arange(len(dataset))
    n1, n0 = dataset.label_counts
    stratify = dataset.labels if min(n1, n0) >= 2 else None
    try:
        train_idx, val_idx = train_test_split(
            indices,
            test_size=validation_fraction,
            stratify=stratify,
            random_state=random_state,
        )
    except ValueError as exc:
        raise InvalidArgumentError(f"cannot split {len(dataset)} samples: {exc}") from exc
    if len(train_idx) < 2 or len(val_idx) < 2:
        raise InvalidArgumentError(
            f"validation fraction {validation_fraction} leaves fewer than 2 samples in a split"
        )
    return dataset.take(np.sort(train_idx)), dataset.take(np.sort(val_idx))


def batch_bounds(n_rows: int, batch_size: int) -> List[Tuple[int, int]]:
    """
    (start, stop) of each mini-batch over n_rows shuffled rows

    A trailing single row is folded into the previous batch, since batch-norm
    statistics need at least two rows.
    """
    bounds = [(start, min(start + batch_size, n_rows)) for start in range(0, n_rows, batch_size)]
    if len(bounds) > 1 and bounds[-1][1] - bounds[-1][0] == 1:
        logger.debug(f"folding a 1-row tail into the previous batch ({n_rows} rows, batch size {batch_size})")
        bounds[-2:] = [(bounds[-2][0], n_rows)]
    return bounds


def input_rms(data: np.ndarray) -> np.ndarray:
    """Per-feature root-mean-square; zero columns map to 1"""
    rms = np.sqrt(np.mean(np.asarray(data, dtype=np.float64) ** 2, axis=0))
    return np.where(rms > 0.0, rms, 1.0)


def train(
    net: NetworkParameters,
    dataset: Dataset,
    loss: LossSpec,
    config: Optional[TrainConfig] = None,
) -> Tuple[NetworkParameters, TrainingHistory]:
    """
    Fit a network to minimize the mean designer loss

    Each epoch shuffles the training split, steps Adam on every mini-batch
    (batch-norm in training mode), then scores the validation split in
    inference mode. Stops after `patience` epochs without improvement.

    Args:
        net: Initialized network (mutated during training)
        dataset: Labelled data
        loss: Designer loss
        config: Training settings

    Returns:
        (parameters of the best validation epoch, TrainingHistory)
    """
    config = config or TrainConfig()
    if dataset.dim != net.input_dim:
        raise InvalidArgumentError(
            f"dataset dimension {dataset.dim} != network input dimension {net.input_dim}"
        )
    dataset.prior_ratio(config.allow_imbalance)
    train_set, val_set = split_dataset(dataset, config.validation_fraction, config.seed)
    if config.standardize_inputs:
        net.input_scale = input_rms(train_set.data)

    opt = init_optimizer(net, config.learning_rate, config.decay_rate)
    history = TrainingHistory(initial_val_loss=evaluate_loss(net, loss, val_set))
    best = copy_network(net)
    epochs_since_best = 0

    for epoch in range(config.max_epochs):
        opt.epoch = epoch
        order = make_rng(config.seed, STREAM_SHUFFLE, epoch).permutation(len(train_set))
        total, seen = 0.0, 0
        for batch_index, (start, stop) in enumerate(batch_bounds(len(order), config.batch_size)):
            idx = order[start:stop]
            x, m = train_set.data[idx], train_set.labels[idx]
            if config.augment_sign_flip:
                x, m = augment_sign_flip(x, m)
            try:
                value, grads, _ = batch_objective(net, loss, x, m)
                if not math.isfinite(value):
                    raise NumericError(f"non-finite training loss {value}")
                adam_step(opt, net, grads)
            except NumericError as exc:
                raise TrainingError(str(exc), epoch=epoch, batch=batch_index) from exc
            total += value * idx.size
            seen += idx.size

        val_loss = evaluate_loss(net, loss, val_set)
        if not math.isfinite(val_loss):
            raise TrainingError(f"non-finite validation loss {val_loss}", epoch=epoch)
        train_loss = total / seen if seen else math.nan
        improved = history.record(train_loss, val_loss, opt.learning_rate)
        logger.debug(
            f"epoch {epoch}: train {train_loss:.6f} val {val_loss:.6f} lr {opt.learning_rate:.3e}"
        )
        if improved:
            best = copy_network(net)
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= config.patience:
                break

    logger.info(
        f"Trained {loss.label}: best val loss {history.best_val_loss:.6f} at epoch "
        f"{history.best_epoch} of {history.n_epochs} (initial {history.initial_val_loss:.6f})"
    )
    return best, history
