"""
Designer loss family for Evidence Networks

Each loss V(f, m) is minimized pointwise at an output f* that is a fixed,
invertible function of the Bayes factor. The decoders here map an optimal
output back to log K.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, NamedTuple, Optional, Union

import numpy as np
from scipy.special import expit

from src.losses.transforms import lpop, lpop_grad
from src.utils.exceptions import DomainError, InvalidArgumentError

ArrayLike = Union[float, np.ndarray]

EXP_CLAMP = 700.0
PROBABILITY_FLOOR = 1e-15


class LossKind(str, Enum):
    POLYNOMIAL = "polynomial"
    CROSS_ENTROPY = "cross_entropy"
    EXPONENTIAL = "exponential"
    LOGISTIC = "logistic"
    ALPHA_EXPONENTIAL = "alpha_exponential"
    ALPHA_LOG_EXPONENT = "alpha_log_exponent"
    LPOP_EXPONENTIAL = "lpop_exponential"


PROBABILITY_KINDS = frozenset({LossKind.POLYNOMIAL, LossKind.CROSS_ENTROPY})
ALPHA_KINDS = frozenset({
    LossKind.POLYNOMIAL,
    LossKind.ALPHA_EXPONENTIAL,
    LossKind.ALPHA_LOG_EXPONENT,
    LossKind.LPOP_EXPONENTIAL,
})

_ALIASES = {
    "crossentropy": LossKind.CROSS_ENTROPY,
    "alphaexponential": LossKind.ALPHA_EXPONENTIAL,
    "alphalogexponent": LossKind.ALPHA_LOG_EXPONENT,
    "lpopexponential": LossKind.LPOP_EXPONENTIAL,
    "lpop": LossKind.LPOP_EXPONENTIAL,
}


def parse_loss_kind(name: Union[str, LossKind]) -> LossKind:
    """Accept 'LPopExponential', 'lpop-exponential', 'lpop_exponential', ..."""
    if isinstance(name, LossKind):
        return name
    key = str(name).strip().lower().replace("-", "_")
    if "asymmetric" in key:
        raise InvalidArgumentError(
            "asymmetric losses (V = m A(f) + (1-m) B(f) with A(f) != B(1-f)) are not supported; "
            "only label-symmetric losses are implemented"
        )
    try:
        return LossKind(key)
    except ValueError:
        compact = key.replace("_", "")
        for kind in LossKind:
            if kind.value.replace("_", "") == compact:
                return kind
        if compact in _ALIASES:
            return _ALIASES[compact]
    valid = ", ".join(kind.value for kind in LossKind)
    raise InvalidArgumentError(f"unknown loss kind '{name}' (valid: {valid})")


@dataclass(frozen=True)
class LossSpec:
    """Loss family plus its alpha; beta (the l-POP leak) is fixed to 1"""

    kind: LossKind = LossKind.LPOP_EXPONENTIAL
    alpha: float = 2.0
    beta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", parse_loss_kind(self.kind))
        object.__setattr__(self, "alpha", float(self.alpha))
        if self.beta != 1.0:
            raise InvalidArgumentError(f"l-POP leak coefficient beta is fixed to 1, got {self.beta}")
        alpha = self.alpha
        if not math.isfinite(alpha):
            raise InvalidArgumentError(f"alpha must be finite, got {alpha}")
        if self.kind is LossKind.POLYNOMIAL and alpha <= 1:
            raise InvalidArgumentError(f"polynomial loss requires alpha > 1, got {alpha}")
        if self.kind is LossKind.LPOP_EXPONENTIAL and alpha < 1:
            raise InvalidArgumentError(f"l-POP exponential loss requires alpha >= 1, got {alpha}")
        if self.kind is LossKind.ALPHA_EXPONENTIAL and alpha <= 1:
            # (1 + e^{sf})^(alpha - 1) is constant at alpha = 1 and has no minimum below it
            raise InvalidArgumentError(f"alpha-exponential loss requires alpha > 1, got {alpha}")
        if self.kind is LossKind.ALPHA_LOG_EXPONENT and alpha <= 0:
            raise InvalidArgumentError(f"alpha-log-exponent loss requires alpha > 0, got {alpha}")

    @property
    def label(self) -> str:
        if self.kind in ALPHA_KINDS:
            return f"{self.kind.value}(alpha={self.alpha:g})"
        return self.kind.value

    def to_config(self) -> Dict[str, object]:
        """Config fragment: {'kind': ..., 'alpha': ...} under the 'loss' section"""
        return {"kind": self.kind.value, "alpha": self.alpha}

    @classmethod
    def from_config(cls, section: Dict[str, object]) -> "LossSpec":
        return cls(kind=section.get("kind", LossKind.LPOP_EXPONENTIAL), alpha=section.get("alpha", 2.0))


@dataclass(frozen=True)
class ModelPriorRatio:
    """log p(M1)/p(M0); zero for balanced training data"""

    log_ratio: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.log_ratio):
            raise InvalidArgumentError(f"log prior ratio must be finite, got {self.log_ratio}")

    @classmethod
    def from_counts(cls, n_model1: int, n_model0: int) -> "ModelPriorRatio":
        if n_model1 <= 0 or n_model0 <= 0:
            raise InvalidArgumentError("both models need at least one sample to define a prior ratio")
        return cls(math.log(n_model1) - math.log(n_model0))


PriorLike = Optional[Union[ModelPriorRatio, float]]


def _delta(prior: PriorLike) -> float:
    if prior is None:
        return 0.0
    if isinstance(prior, ModelPriorRatio):
        return prior.log_ratio
    return ModelPriorRatio(float(prior)).log_ratio


def _as_output(values: np.ndarray, like) -> ArrayLike:
    return float(values) if np.ndim(like) == 0 else values


def _labels(m) -> np.ndarray:
    m_arr = np.asarray(m, dtype=np.float64)
    if not np.all((m_arr == 0.0) | (m_arr == 1.0)):
        raise InvalidArgumentError("model labels must be 0 or 1")
    return m_arr


def _check_domain(spec: LossSpec, f: np.ndarray) -> None:
    if spec.kind in PROBABILITY_KINDS:
        if not np.all((f > 0.0) & (f < 1.0)):
            raise DomainError(spec.kind.value, "(0, 1)")
    elif spec.kind is LossKind.ALPHA_LOG_EXPONENT:
        if not np.all(f > 0.0):
            raise DomainError(spec.kind.value, "(0, inf)")
    elif not np.all(np.isfinite(f)):
        raise DomainError(spec.kind.value, "(-inf, inf)", "non-finite output")


def _clamped_exp(arg: np.ndarray):
    clipped = np.clip(arg, -EXP_CLAMP, EXP_CLAMP)
    return np.exp(clipped), bool(np.any(clipped != arg))


def _evaluate(spec: LossSpec, f, m):
    """Shared kernel: (value, dV/df, saturated) as arrays"""
    f_arr = np.asarray(f, dtype=np.float64)
    m_arr = _labels(m)
    _check_domain(spec, f_arr)
    alpha = spec.alpha
    saturated = False
    half = 0.5 - m_arr  # (1/2 - m)
    sign = 1.0 - 2.0 * m_arr  # (1 - 2m)

    if spec.kind is LossKind.POLYNOMIAL:
        value = m_arr * (1.0 - f_arr) ** alpha + (1.0 - m_arr) * f_arr ** alpha
        grad = -m_arr * alpha * (1.0 - f_arr) ** (alpha - 1.0) + (1.0 - m_arr) * alpha * f_arr ** (alpha - 1.0)
    elif spec.kind is LossKind.CROSS_ENTROPY:
        value = -m_arr * np.log(f_arr) - (1.0 - m_arr) * np.log1p(-f_arr)
        grad = -m_arr / f_arr + (1.0 - m_arr) / (1.0 - f_arr)
    elif spec.kind is LossKind.EXPONENTIAL:
        value, saturated = _clamped_exp(half * f_arr)
        grad = half * value
    elif spec.kind is LossKind.LOGISTIC:
        value = np.logaddexp(0.0, sign * f_arr)
        grad = sign * expit(sign * f_arr)
    elif spec.kind is LossKind.ALPHA_EXPONENTIAL:
        value, saturated = _clamped_exp((alpha - 1.0) * np.logaddexp(0.0, sign * f_arr))
        grad = (alpha - 1.0) * sign * expit(sign * f_arr) * value
    elif spec.kind is LossKind.ALPHA_LOG_EXPONENT:
        power = half * alpha
        log_f = np.log(f_arr)
        value, saturated = _clamped_exp(power * log_f)
        grad_scale, grad_saturated = _clamped_exp((power - 1.0) * log_f)
        grad = power * grad_scale
        saturated = saturated or grad_saturated
    else:
        value, saturated = _clamped_exp(half * lpop(f_arr, alpha))
        grad = half * lpop_grad(f_arr, alpha) * value
    return value, grad, saturated


def loss_value(spec: LossSpec, f: ArrayLike, m) -> ArrayLike:
    """
    Evaluate V(f, m)

    Args:
        spec: Loss specification
        f: Loss argument(s) (the linked network output)
        m: Model label(s), 0 or 1

    Returns:
        Loss value(s), shaped like f
    """
    value, _, _ = _evaluate(spec, f, m)
    return _as_output(value, f)


def loss_grad(spec: LossSpec, f: ArrayLike, m) -> ArrayLike:
    """Exact dV/df, shaped like f"""
    _, grad, _ = _evaluate(spec, f, m)
    return _as_output(grad, f)


class BatchLoss(NamedTuple):
    mean: float
    grads: np.ndarray
    saturated: bool


def batch_loss(spec: LossSpec, f: np.ndarray, labels: np.ndarray) -> BatchLoss:
    """
    Mean loss over a batch with per-sample dV/df

    The saturation flag is set when any exponent hit the +/-700 clamp.
    """
    value, grad, saturated = _evaluate(spec, np.asarray(f, dtype=np.float64), labels)
    return BatchLoss(float(np.mean(value)), np.asarray(grad, dtype=np.float64), saturated)


def output_link(spec: LossSpec, raw: ArrayLike) -> ArrayLike:
    """
    Map the raw network output onto the loss domain

    Sigmoid for probability-valued losses, exp for alpha-log-exponent,
    identity otherwise.
    """
    raw_arr = np.asarray(raw, dtype=np.float64)
    if spec.kind in PROBABILITY_KINDS:
        out = np.clip(expit(raw_arr), PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)
    elif spec.kind is LossKind.ALPHA_LOG_EXPONENT:
        out = np.exp(np.clip(raw_arr, -EXP_CLAMP, EXP_CLAMP))
    else:
        out = raw_arr
    return _as_output(out, raw)


def output_link_grad(spec: LossSpec, raw: ArrayLike) -> ArrayLike:
    raw_arr = np.asarray(raw, dtype=np.float64)
    if spec.kind in PROBABILITY_KINDS:
        s = expit(raw_arr)
        out = s * (1.0 - s)
    elif spec.kind is LossKind.ALPHA_LOG_EXPONENT:
        out = np.exp(np.clip(raw_arr, -EXP_CLAMP, EXP_CLAMP))
    else:
        out = np.ones_like(raw_arr)
    return _as_output(out, raw)


def decode_log_k(spec: LossSpec, f: ArrayLike, prior: PriorLike = None) -> ArrayLike:
    """
    Convert an optimal loss argument into log K

    Args:
        spec: Loss the network was trained with
        f: Optimal loss argument(s)
        prior: Model prior ratio of the training data (default equal priors)

    Returns:
        log Bayes factor(s)
    """
    f_arr = np.asarray(f, dtype=np.float64)
    _check_domain(spec, f_arr)
    delta = _delta(prior)
    alpha = spec.alpha

    if spec.kind in (LossKind.EXPONENTIAL, LossKind.LOGISTIC):
        log_k = f_arr
    elif spec.kind is LossKind.ALPHA_EXPONENTIAL:
        log_k = alpha * f_arr
    elif spec.kind is LossKind.ALPHA_LOG_EXPONENT:
        log_k = alpha * np.log(f_arr)
    elif spec.kind is LossKind.LPOP_EXPONENTIAL:
        log_k = lpop(f_arr, alpha)
    else:
        log_odds = np.log(f_arr) - np.log1p(-f_arr)
        # stationarity of the polynomial loss: (f / (1 - f))^(alpha - 1) = posterior odds
        log_k = log_odds if spec.kind is LossKind.CROSS_ENTROPY else (alpha - 1.0) * log_odds
    return _as_output(log_k - delta, f)


def decode_network_output(spec: LossSpec, raw: ArrayLike, prior: PriorLike = None) -> ArrayLike:
    """
    Decode raw network outputs to log K

    Linked kinds are decoded from the raw value directly (the link and the
    decoder's logarithm cancel), so saturation of the sigmoid does not
    truncate large Bayes factors.
    """
    raw_arr = np.asarray(raw, dtype=np.float64)
    delta = _delta(prior)
    if spec.kind is LossKind.CROSS_ENTROPY:
        return _as_output(raw_arr - delta, raw)
    if spec.kind is LossKind.POLYNOMIAL:
        return _as_output((spec.alpha - 1.0) * raw_arr - delta, raw)
    if spec.kind is LossKind.ALPHA_LOG_EXPONENT:
        return _as_output(spec.alpha * raw_arr - delta, raw)
    return decode_log_k(spec, raw, prior)


def decode_posterior(log_k: ArrayLike, prior: PriorLike = None) -> ArrayLike:
    """
    Model-1 posterior probability from log K

    sigma(log K + delta), overflow-safe; +inf maps to 1 and -inf to 0.
    """
    arr = np.asarray(log_k, dtype=np.float64)
    return _as_output(expit(arr + _delta(prior)), log_k)
