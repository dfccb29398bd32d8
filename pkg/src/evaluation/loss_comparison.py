"""
Train one network per designer loss and compare accuracy against an oracle
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Sequence

import numpy as np
import pandas as pd

from src.evaluation.metrics import rmse_log_k
from src.losses import LossSpec
from src.training import Dataset, TrainConfig, ensemble_log_k, train_ensemble
from src.utils.exceptions import InvalidArgumentError
from src.utils.logger import get_logger

logger = get_logger(__name__)

HIGH_LOG_K = 5.0


def loss_comparison_report(
    specs: Sequence[LossSpec],
    dataset: Dataset,
    config: TrainConfig,
    eval_data: np.ndarray,
    eval_truth: np.ndarray,
    high_threshold: float = HIGH_LOG_K,
    threads: int = 1,
) -> pd.DataFrame:
    """
    RMSE of a single network per loss, overall and on the high-|log K| stratum

    Every loss is trained on the same data with the same seed and config.

    Args:
        specs: Losses to compare
        dataset: Shared training data
        config: Shared training settings
        eval_data: Held-out data matrix
        eval_truth: Oracle log K for each held-out row
        high_threshold: Stratum is |log K_true| > high_threshold
        threads: Losses trained concurrently

    Returns:
        DataFrame with columns loss, kind, alpha, rmse, rmse_high, n_high
    """
    if not specs:
        raise InvalidArgumentError("need at least one loss to compare")
    eval_truth = np.asarray(eval_truth, dtype=np.float64)
    if eval_truth.shape != (np.asarray(eval_data).shape[0],):
        raise InvalidArgumentError("eval_truth must have one value per held-out row")
    high = np.abs(eval_truth) > high_threshold

    def score(spec: LossSpec) -> Dict[str, object]:
        ensemble = train_ensemble(1, dataset, spec, config)
        predicted, _ = ensemble_log_k(ensemble, eval_data)
        row = {
            "loss": spec.label,
            "kind": spec.kind.value,
            "alpha": spec.alpha,
            "rmse": rmse_log_k(predicted, eval_truth),
            "rmse_high": rmse_log_k(predicted[high], eval_truth[high]) if high.any() else np.nan,
            "n_high": int(high.sum()),
        }
        logger.info(f"{spec.label}: rmse {row['rmse']:.4f}, high-|log K| rmse {row['rmse_high']:.4f}")
        return row

    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        rows = list(pool.map(score, specs))
    return pd.DataFrame(rows, columns=["loss", "kind", "alpha", "rmse", "rmse_high", "n_high"])

