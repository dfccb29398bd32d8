"""
Ensembles of independently initialized Evidence Networks

Members share architecture, loss and training config and differ only in
seed. Their outputs are averaged after decoding to log K.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.losses import LossSpec, ModelPriorRatio, decode_network_output
from src.network import Mode, NetworkParameters, forward, init_network, load_checkpoint, save_checkpoint
from src.training.dataset import Dataset
from src.training.trainer import TrainConfig, TrainingHistory, train
from src.utils.exceptions import InvalidArgumentError, TrainingError
from src.utils.helpers import load_json, read_csv, save_json, write_csv
from src.utils.logger import get_logger

logger = get_logger(__name__)

MANIFEST_NAME = "ensemble.json"


@dataclass
class Ensemble:
    members: List[NetworkParameters]
    loss: LossSpec
    prior: ModelPriorRatio = field(default_factory=ModelPriorRatio)
    histories: List[Optional[TrainingHistory]] = field(default_factory=list)
    seeds: List[int] = field(default_factory=list)
    columns: Optional[List[int]] = None

    def __post_init__(self):
        if not self.members:
            raise InvalidArgumentError("an ensemble needs at least one member")
        dims = {net.input_dim for net in self.members}
        if len(dims) != 1:
            raise InvalidArgumentError(f"ensemble members disagree on input dimension: {sorted(dims)}")
        if not self.histories:
            self.histories = [None] * len(self.members)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def input_dim(self) -> int:
        return self.members[0].input_dim


def train_ensemble(
    k: int,
    dataset: Dataset,
    loss: LossSpec,
    config: Optional[TrainConfig] = None,
    threads: int = 1,
    columns: Optional[Sequence[int]] = None,
) -> Ensemble:
    """
    Train k members with seeds config.seed + 0 .. config.seed + k - 1

    Args:
        k: Member count (>= 1)
        dataset: Labelled training data (shared, read-only)
        loss: Designer loss
        config: Training settings
        threads: Members trained concurrently
        columns: Train on this column subset of the dataset

    Returns:
        Ensemble
    """
    if k < 1:
        raise InvalidArgumentError(f"ensemble size must be >= 1, got {k}")
    config = config or TrainConfig()
    data = dataset.select_columns(columns)
    prior = data.prior_ratio(config.allow_imbalance)
    seeds = [config.seed + i for i in range(k)]

    def fit_member(index: int) -> Tuple[NetworkParameters, TrainingHistory]:
        member_config = config.model_copy(update={"seed": seeds[index]})
        net = init_network(data.dim, seeds[index])
        try:
            result = train(net, data, loss, member_config)
        except TrainingError as exc:
            raise exc.for_member(index) from exc
        logger.info(f"Member {index + 1}/{k} done (seed {seeds[index]})")
        return result

    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        results = list(pool.map(fit_member, range(k)))

    return Ensemble(
        members=[net for net, _ in results],
        loss=loss,
        prior=prior,
        histories=[history for _, history in results],
        seeds=seeds,
        columns=None if columns is None else [int(c) for c in columns],
    )


def member_log_k(ensemble: Ensemble, batch: np.ndarray) -> np.ndarray:
    """Decoded log K of every member: shape (k, n)"""
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if batch.shape[1] != ensemble.input_dim:
        raise InvalidArgumentError(
            f"batch dimension {batch.shape[1]} != ensemble input dimension {ensemble.input_dim}"
        )
    rows = []
    for net in ensemble.members:
        raw, _ = forward(net, batch, Mode.INFERENCE)
        rows.append(decode_network_output(ensemble.loss, raw, ensemble.prior))
    return np.vstack(rows)


def jackknife(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mean and leave-one-out jackknife standard error along axis 0

    stderr = sqrt((k - 1) / k * sum_i (mean_(i) - mean_loo)^2); zero when k = 1.
    """
    values = np.asarray(values, dtype=np.float64)
    k = values.shape[0]
    mean = values.mean(axis=0)
    if k == 1:
        return mean, np.zeros_like(mean)
    leave_one_out = (values.sum(axis=0) - values) / (k - 1)
    spread = leave_one_out - leave_one_out.mean(axis=0)
    return mean, np.sqrt((k - 1) / k * np.sum(spread ** 2, axis=0))


def ensemble_log_k(ensemble: Ensemble, batch: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Ensemble log K estimate per row

    Args:
        ensemble: Trained ensemble
        batch: (n, dim) data matrix already restricted to the ensemble's columns

    Returns:
        (mean log K, jackknife standard error), each of length n
    """
    return jackknife(member_log_k(ensemble, batch))


def save_ensemble(
    ensemble: Ensemble,
    directory: Union[str, Path],
    provenance: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write member_<i>.evnn checkpoints, history_<i>.csv files and ensemble.json

    Args:
        ensemble: Ensemble to save
        directory: Output directory
        provenance: Extra manifest fields (seed, config hash)

    Returns:
        Manifest path
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    provenance = dict(provenance or {})
    members = []
    for i, net in enumerate(ensemble.members):
        checkpoint = save_checkpoint(net, directory / f"member_{i}.evnn")
        entry = {"checkpoint": checkpoint.name, "seed": ensemble.seeds[i] if ensemble.seeds else None}
        history = ensemble.histories[i]
        if history is not None:
            path = write_csv(history.to_frame(), directory / f"history_{i}.csv", header=provenance)
            entry["history"] = path.name
            entry["best_epoch"] = history.best_epoch
        members.append(entry)
        logger.info(f"Saved {checkpoint}")

    manifest = {
        **provenance,
        "loss": ensemble.loss.to_config(),
        "log_prior_ratio": ensemble.prior.log_ratio,
        "input_dim": ensemble.input_dim,
        "columns": ensemble.columns,
        "members": members,
    }
    path = directory / MANIFEST_NAME
    save_json(manifest, path)
    return path


def load_ensemble(directory: Union[str, Path]) -> Ensemble:
    """Read an ensemble written by save_ensemble"""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {directory}")
    manifest = load_json(manifest_path)
    members, histories, seeds = [], [], []
    for entry in manifest["members"]:
        members.append(load_checkpoint(directory / entry["checkpoint"]))
        history_name = entry.get("history")
        histories.append(
            TrainingHistory.from_frame(read_csv(directory / history_name)) if history_name else None
        )
        seeds.append(entry.get("seed"))
    return Ensemble(
        members=members,
        loss=LossSpec.from_config(manifest["loss"]),
        prior=ModelPriorRatio(float(manifest.get("log_prior_ratio", 0.0))),
        histories=histories,
        seeds=seeds,
        columns=manifest.get("columns"),
    )
