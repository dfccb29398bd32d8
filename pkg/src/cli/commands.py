"""
Subcommand implementations

Each command takes a RunContext, writes its artifacts under the output
directory and raises package exceptions; main() maps them to exit codes.
"""

from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src.cli.run_config import RunConfig
from src.evaluation import (
    BayesFactorEstimate,
    EstimateSource,
    coverage_test,
    loss_comparison_report,
    ppt_log_k,
    rmse_log_k,
    write_coverage_report,
)
from src.models import ModelPair, RastriginPair, baseline_log_k, fit_gaussian_mle
from src.training import (
    Dataset,
    Ensemble,
    ensemble_log_k,
    generate_training_set,
    load_ensemble,
    read_dataset,
    save_ensemble,
    train_ensemble,
    write_dataset,
)
from src.utils.exceptions import CalibrationFailure, ConfigError, InvalidArgumentError
from src.utils.helpers import ensure_dir, save_json, save_yaml, write_csv
from src.utils.logger import get_logger

logger = get_logger(__name__)

# keeps evaluation draws disjoint from training draws of the same run seed
EVAL_SEED_OFFSET = 1_000_003


@dataclass
class RunContext:
    config: RunConfig
    threads: int = 1
    provenance: Dict[str, Any] = field(init=False)

    def __post_init__(self):
        self.provenance = {"seed": self.config.seed, "config_hash": self.config.hash}

    @property
    def out(self) -> Path:
        return self.config.io.out

    @property
    def pair(self) -> ModelPair:
        return self.config.model.pair()

    def prepare_output(self) -> Path:
        """Create the output directory and write resolved_config.yaml into it"""
        out = ensure_dir(self.out)
        save_yaml(self.config.resolved(), out / "resolved_config.yaml")
        return out

    def manifest(self, **fields) -> Dict[str, Any]:
        return {**self.provenance, "created_at": datetime.now(timezone.utc).isoformat(), **fields}

    def write_csv(self, frame: pd.DataFrame, name: str) -> Path:
        path = write_csv(frame, self.out / name, header=self.provenance)
        logger.info(f"Wrote {path}")
        return path

    def write_json(self, data: Dict[str, Any], name: str) -> Path:
        path = self.out / name
        save_json({**self.provenance, **data}, path)
        logger.info(f"Wrote {path}")
        return path


def _load_dataset(path: Path) -> Dataset:
    if not path.exists():
        raise FileNotFoundError(f"dataset not found: {path} (run gen-data first)")
    return read_dataset(path)


def _load_ensemble(ctx: RunContext, directory: Optional[Path] = None) -> Ensemble:
    directory = directory or ctx.config.io.checkpoint_dir()
    if not directory.exists():
        raise FileNotFoundError(f"checkpoint directory not found: {directory} (run train first)")
    return load_ensemble(directory)


def _eval_dataset(ctx: RunContext) -> Dataset:
    path = ctx.config.io.eval_dataset_path()
    return _load_dataset(path if path.exists() else ctx.config.io.dataset_path())


def _ensemble_input(ensemble: Ensemble, dataset: Dataset) -> np.ndarray:
    data = dataset.select_columns(ensemble.columns).data
    if data.shape[1] != ensemble.input_dim:
        raise InvalidArgumentError(
            f"data dimension {data.shape[1]} does not match checkpoint input dimension {ensemble.input_dim}"
        )
    return data


def _train_and_save(ctx: RunContext, dataset: Dataset) -> Ensemble:
    config = ctx.config
    ensemble = train_ensemble(
        config.train.ensemble_size,
        dataset,
        config.loss.spec(),
        config.train_config(),
        threads=ctx.threads,
        columns=config.model.columns,
    )
    save_ensemble(ensemble, config.io.checkpoint_dir(), ctx.manifest(model=ctx.pair.describe()))
    return ensemble


def cmd_gen_data(ctx: RunContext, evaluation: bool = False) -> int:
    """Write an EVDS dataset and its JSON manifest"""
    config = ctx.config
    ctx.prepare_output()
    pair = ctx.pair
    if evaluation:
        n_per_model, seed = config.eval.n_per_model, config.seed + EVAL_SEED_OFFSET
        path = config.io.eval_dataset_path()
    else:
        n_per_model, seed = config.model.n_per_model, config.seed
        path = config.io.dataset_path()
    dataset = generate_training_set(pair, n_per_model, seed)
    write_dataset(dataset, path)
    n1, n0 = dataset.label_counts
    save_json(
        ctx.manifest(
            dataset=path.name,
            n_samples=len(dataset),
            dim=dataset.dim,
            label_counts={"1": n1, "0": n0},
            sample_seed=seed,
            model=pair.describe(),
        ),
        path.with_suffix(".json"),
    )
    logger.info(f"Wrote {path} ({len(dataset)} rows)")
    return 0


def cmd_train(ctx: RunContext) -> int:
    """Train an ensemble and write member checkpoints, histories and ensemble.json"""
    dataset = _load_dataset(ctx.config.io.dataset_path())
    ctx.prepare_output()
    _train_and_save(ctx, dataset)
    return 0


def _observed_vector(path: Path) -> np.ndarray:
    if not path.exists():
        raise FileNotFoundError(f"observed data file not found: {path}")
    return pd.read_csv(path, header=None, comment="#").to_numpy(dtype=np.float64).ravel()


def cmd_eval(ctx: RunContext, observed: Optional[str] = None) -> int:
    """
    Predictions CSV with ensemble log K, jackknife error and oracle truth

    With `observed`, estimate log K for a single data vector and print it.
    """
    config = ctx.config
    ensemble = _load_ensemble(ctx)

    if observed is not None:
        x = _observed_vector(Path(observed))
        if ensemble.columns is not None:
            x = x[ensemble.columns] if x.size == config.model.n_dim else x
        if x.size != ensemble.input_dim:
            raise InvalidArgumentError(
                f"observed vector has {x.size} values, checkpoint expects {ensemble.input_dim}"
            )
        log_k, stderr = ensemble_log_k(ensemble, x[None, :])
        estimate = BayesFactorEstimate(float(log_k[0]), float(stderr[0]), EstimateSource.ENSEMBLE)
        print(estimate.describe())
        return 0

    dataset = _eval_dataset(ctx)
    data = _ensemble_input(ensemble, dataset)
    ctx.prepare_output()
    log_k, stderr = ensemble_log_k(ensemble, data)
    frame = pd.DataFrame({
        "sample_index": np.arange(len(dataset)),
        "label": dataset.labels,
        "log_k": log_k,
        "log_k_stderr": stderr,
    })
    summary: Dict[str, Any] = {"n_samples": len(dataset), "members": len(ensemble)}

    pair = ctx.pair
    if pair.has_oracle and pair.dim == dataset.dim:
        truth = pair.log_k(data, ensemble.columns)
        frame["log_k_true"] = truth
        frame["residual"] = log_k - truth
        summary["rmse_log_k"] = rmse_log_k(log_k, truth)
        summary["log10_k_span"] = float(np.log10(np.e) * (truth.max() - truth.min()))

    if config.eval.reference_checkpoints:
        reference = _load_ensemble(ctx, Path(config.eval.reference_checkpoints))
        subset_log_k, _ = ensemble_log_k(reference, _ensemble_input(reference, dataset))
        frame["ppt_log_k"] = ppt_log_k(log_k, subset_log_k)

    ctx.write_csv(frame, "predictions.csv")
    ctx.write_json(summary, "eval_summary.json")
    if "rmse_log_k" in summary:
        logger.info(f"RMSE(log K) = {summary['rmse_log_k']:.4f} over {len(dataset)} samples")
    return 0


def cmd_coverage(ctx: RunContext, debug_scale_logits: Optional[float] = None) -> int:
    """
    Blind coverage test on a labelled dataset

    Raises CalibrationFailure when the residual summary falls outside the
    configured thresholds.
    """
    config = ctx.config
    ensemble = _load_ensemble(ctx)
    dataset = _eval_dataset(ctx)
    log_k, _ = ensemble_log_k(ensemble, _ensemble_input(ensemble, dataset))
    if debug_scale_logits is not None:
        log_k = log_k * debug_scale_logits
    ctx.prepare_output()
    report = coverage_test(
        log_k,
        dataset.labels,
        n_bins=config.eval.n_bins,
        min_count=config.eval.min_count,
        prior=dataset.prior_ratio(config.train.allow_imbalance),
        thresholds=config.eval.thresholds(),
    )
    provenance = dict(ctx.provenance)
    if debug_scale_logits is not None:
        provenance["debug_scale_logits"] = debug_scale_logits
    paths = write_coverage_report(report, ctx.out, provenance)
    logger.info(f"Wrote {paths['csv']} and {paths['summary']}")
    if not report.passed:
        raise CalibrationFailure(
            f"coverage residual mean {report.residual_mean:.3f} / std {report.residual_std:.3f} "
            f"outside thresholds"
        )
    return 0


def cmd_rastrigin(ctx: RunContext) -> int:
    """Network and quadrature log K on a regular 2-D grid"""
    config = ctx.config
    pair = ctx.pair
    if not isinstance(pair, RastriginPair) or pair.dim != 2:
        raise ConfigError("rastrigin grid needs family 'rastrigin' with n_dim 2", key="model.family")
    ctx.prepare_output()

    if (config.io.checkpoint_dir() / "ensemble.json").exists():
        ensemble = _load_ensemble(ctx)
    else:
        dataset_path = config.io.dataset_path()
        if dataset_path.exists():
            dataset = read_dataset(dataset_path)
        else:
            dataset = generate_training_set(pair, config.model.n_per_model, config.seed)
            write_dataset(dataset, dataset_path)
        ensemble = _train_and_save(ctx, dataset)

    axis = np.linspace(-config.eval.grid_limit, config.eval.grid_limit, config.eval.grid_points)
    x1, x2 = np.meshgrid(axis, axis, indexing="ij")
    grid = np.column_stack([x1.ravel(), x2.ravel()])
    network, stderr = ensemble_log_k(ensemble, grid)
    oracle = pair.log_k(grid)
    frame = pd.DataFrame({
        "x1": grid[:, 0],
        "x2": grid[:, 1],
        "log_k_network": network,
        "log_k_stderr": stderr,
        "log_k_oracle": oracle,
    })
    ctx.write_csv(frame, "rastrigin_grid.csv")
    ctx.write_json(
        {
            "grid_points": config.eval.grid_points,
            "noise_variance": pair.noise_variance,
            "rmse_log_k": rmse_log_k(network, oracle),
            "oracle_max_abs": float(np.max(np.abs(oracle))),
            "oracle_changes_sign": bool(oracle.min() < 0.0 < oracle.max()),
        },
        "rastrigin_summary.json",
    )
    return 0


def cmd_baseline(ctx: RunContext) -> int:
    """Residuals of the Gaussian-MLE baseline and the ensemble against the oracle"""
    config = ctx.config
    pair = ctx.pair
    if not pair.has_oracle:
        raise InvalidArgumentError(f"{pair.family} pair has no oracle to compare against")
    train_set = _load_dataset(config.io.dataset_path())
    ensemble = _load_ensemble(ctx)
    held_out = _eval_dataset(ctx)
    ctx.prepare_output()

    columns = ensemble.columns
    fit_1 = fit_gaussian_mle(train_set.select_columns(columns).data[train_set.labels == 1])
    fit_0 = fit_gaussian_mle(train_set.select_columns(columns).data[train_set.labels == 0])
    data = _ensemble_input(ensemble, held_out)
    truth = pair.log_k(data, columns)
    network, _ = ensemble_log_k(ensemble, data)
    residuals = {
        "gaussian-mle": baseline_log_k(fit_1, fit_0, data) - truth,
        "evidence-network": network - truth,
    }

    frame = pd.concat(
        [
            pd.DataFrame({"method": method, "sample_index": np.arange(len(held_out)), "residual": values})
            for method, values in residuals.items()
        ],
        ignore_index=True,
    )
    ctx.write_csv(frame, "baseline_residuals.csv")

    limit = max(float(np.max(np.abs(v))) for v in residuals.values()) or 1.0
    edges = np.linspace(-limit, limit, config.eval.histogram_bins + 1)
    histograms = []
    for method, values in residuals.items():
        counts, _ = np.histogram(values, bins=edges)
        histograms.append(pd.DataFrame({
            "method": method, "bin_lo": edges[:-1], "bin_hi": edges[1:], "count": counts,
        }))
    ctx.write_csv(pd.concat(histograms, ignore_index=True), "baseline_histogram.csv")
    ctx.write_json(
        {
            "n_samples": len(held_out),
            "rmse": {method: float(np.sqrt(np.mean(v ** 2))) for method, v in residuals.items()},
            "baseline_jitter": {"1": fit_1.jitter, "0": fit_0.jitter},
        },
        "baseline_summary.json",
    )
    return 0


def cmd_oracle(ctx: RunContext) -> int:
    """Dump exact log K for every row of the evaluation dataset"""
    pair = ctx.pair
    if not pair.has_oracle:
        raise InvalidArgumentError(f"{pair.family} pair has no exact oracle")
    dataset = _eval_dataset(ctx)
    columns = ctx.config.model.columns
    data = dataset.select_columns(columns).data
    ctx.prepare_output()
    truth = np.asarray(pair.log_k(data, columns), dtype=np.float64)
    frame = pd.DataFrame({
        "sample_index": np.arange(len(dataset)),
        "log_k_true": truth,
        "method": pair.oracle_method.value,
        "stderr": 0.0,
    })
    ctx.write_csv(frame, "oracle.csv")
    return 0


def cmd_compare_losses(ctx: RunContext) -> int:
    """Single-network RMSE per loss, overall and for |log K_true| above the threshold"""
    config = ctx.config
    pair = ctx.pair
    if not pair.has_oracle:
        raise InvalidArgumentError(f"{pair.family} pair has no oracle to score against")
    train_set = _load_dataset(config.io.dataset_path())
    held_out = _eval_dataset(ctx)
    columns = config.model.columns
    ctx.prepare_output()
    eval_data = held_out.select_columns(columns).data
    report = loss_comparison_report(
        [section.spec() for section in config.eval.compare_losses],
        train_set.select_columns(columns),
        config.train_config(),
        eval_data,
        pair.log_k(eval_data, columns),
        high_threshold=config.eval.high_threshold,
        threads=ctx.threads,
    )
    ctx.write_csv(report, "loss_comparison.csv")
    return 0

