"""
Blind coverage test

Network posteriors p(M1 | x) are binned; in each bin the empirical
fraction of model-1 labels should match the mean prediction within the
binomial standard error. Needs labels only, no true Bayes factors.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np
import pandas as pd

from src.losses import ModelPriorRatio, decode_posterior
from src.utils.exceptions import DiagnosticError, InvalidArgumentError
from src.utils.helpers import save_json, write_csv
from src.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class CoverageThresholds:
    """Pass band for the residual summary"""

    max_abs_mean: float = 0.1
    min_std: float = 0.8
    max_std: float = 1.2

    def accepts(self, mean: float, std: float) -> bool:
        return abs(mean) <= self.max_abs_mean and self.min_std <= std <= self.max_std


@dataclass
class CoverageReport:
    edges: np.ndarray
    counts: np.ndarray
    p_mean: np.ndarray
    fraction: np.ndarray
    sigma_err: np.ndarray
    residual: np.ndarray
    excluded: np.ndarray
    min_count: int
    thresholds: CoverageThresholds

    @property
    def n_bins(self) -> int:
        return self.counts.size

    @property
    def included(self) -> np.ndarray:
        return ~self.excluded

    @property
    def n_included(self) -> int:
        return int(self.counts[self.included].sum())

    @property
    def residual_mean(self) -> float:
        return float(np.mean(self.residual[self.included]))

    @property
    def residual_std(self) -> float:
        return float(np.std(self.residual[self.included]))

    @property
    def passed(self) -> bool:
        return self.thresholds.accepts(self.residual_mean, self.residual_std)

    def to_frame(self) -> pd.DataFrame:
        """One row per bin: bin_lo, bin_hi, n, p_mean, fraction, sigma_err, residual, excluded"""
        return pd.DataFrame({
            "bin_lo": self.edges[:-1],
            "bin_hi": self.edges[1:],
            "n": self.counts,
            "p_mean": self.p_mean,
            "fraction": self.fraction,
            "sigma_err": self.sigma_err,
            "residual": self.residual,
            "excluded": self.excluded,
        })

    def summary(self) -> Dict[str, Any]:
        return {
            "n_bins": self.n_bins,
            "min_count": self.min_count,
            "n_samples": int(self.counts.sum()),
            "n_included": self.n_included,
            "excluded_bins": [int(i) for i in np.flatnonzero(self.excluded)],
            "residual_mean": self.residual_mean,
            "residual_std": self.residual_std,
            "thresholds": {
                "max_abs_mean": self.thresholds.max_abs_mean,
                "min_std": self.thresholds.min_std,
                "max_std": self.thresholds.max_std,
            },
            "passed": self.passed,
        }


def coverage_test(
    log_k_estimates,
    labels,
    n_bins: int = 10,
    min_count: int = 20,
    prior: Optional[ModelPriorRatio] = None,
    thresholds: Optional[CoverageThresholds] = None,
) -> CoverageReport:
    """
    Bin predicted model posteriors and compare with label fractions

    Args:
        log_k_estimates: Estimated log K per sample
        labels: True model label per sample (0 or 1)
        n_bins: Equal-width probability bins on [0, 1] (>= 2)
        min_count: Bins with fewer samples are excluded from the summary
        prior: Prior ratio of the labelled set (default equal priors)
        thresholds: Pass band for the residual summary

    Returns:
        CoverageReport with every bin, excluded ones flagged
    """
    log_k = np.asarray(log_k_estimates, dtype=np.float64).ravel()
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if log_k.shape != labels.shape:
        raise InvalidArgumentError(f"{log_k.size} estimates but {labels.size} labels")
    if not np.all((labels == 0.0) | (labels == 1.0)):
        raise InvalidArgumentError("labels must be 0 or 1")
    if n_bins < 2:
        raise InvalidArgumentError(f"n_bins must be >= 2, got {n_bins}")
    if np.any(np.isnan(log_k)):
        raise InvalidArgumentError("log K estimates contain NaN")

    posterior = np.asarray(decode_posterior(log_k, prior), dtype=np.float64)
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    index = np.minimum((posterior * n_bins).astype(int), n_bins - 1)

    counts = np.bincount(index, minlength=n_bins)
    p_sum = np.bincount(index, weights=posterior, minlength=n_bins)
    label_sum = np.bincount(index, weights=labels, minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        p_mean = p_sum / counts
        fraction = label_sum / counts
        sigma_err = np.sqrt(p_mean * (1.0 - p_mean) / counts)
        residual = (fraction - p_mean) / sigma_err
    # a bin predicting exactly 0 or 1 has no binomial spread
    excluded = (counts < min_count) | ~(sigma_err > 0.0)

    if np.all(excluded):
        raise DiagnosticError(
            f"no bin holds {min_count} samples with a non-degenerate mean prediction; "
            f"use at least {n_bins * min_count} labelled samples or lower eval.min_count"
        )
    report = CoverageReport(
        edges=edges,
        counts=counts,
        p_mean=p_mean,
        fraction=fraction,
        sigma_err=sigma_err,
        residual=residual,
        excluded=excluded,
        min_count=min_count,
        thresholds=thresholds or CoverageThresholds(),
    )
    logger.info(
        f"Coverage: residual mean {report.residual_mean:.3f}, std {report.residual_std:.3f} "
        f"over {int(report.included.sum())} bins ({'pass' if report.passed else 'fail'})"
    )
    return report


def write_coverage_report(
    report: CoverageReport,
    directory: Union[str, Path],
    provenance: Optional[Mapping[str, Any]] = None,
) -> Dict[str, Path]:
    """Write coverage.csv and coverage_summary.json, both stamped with provenance"""
    directory = Path(directory)
    csv_path = write_csv(report.to_frame(), directory / "coverage.csv", header=provenance)
    summary = {**dict(provenance or {}), **report.summary()}
    json_path = directory / "coverage_summary.json"
    save_json(summary, json_path)
    return {"csv": csv_path, "summary": json_path}

