"""
Dataset assembly, training loop and ensembles
"""

from .dataset import (
    Dataset,
    generate_training_set,
    augment_sign_flip,
    write_dataset,
    read_dataset,
)
from .trainer import (
    TrainConfig,
    TrainingHistory,
    batch_objective,
    batch_bounds,
    evaluate_loss,
    split_dataset,
    train,
)
from .ensemble import (
    Ensemble,
    train_ensemble,
    member_log_k,
    jackknife,
    ensemble_log_k,
    save_ensemble,
    load_ensemble,
)

__all__ = [
    "Dataset",
    "generate_training_set",
    "augment_sign_flip",
    "write_dataset",
    "read_dataset",
    "TrainConfig",
    "TrainingHistory",
    "batch_objective",
    "batch_bounds",
    "evaluate_loss",
    "split_dataset",
    "train",
    "Ensemble",
    "train_ensemble",
    "member_log_k",
    "jackknife",
    "ensemble_log_k",
    "save_ensemble",
    "load_ensemble",
]
