"""
Adam optimizer with a per-epoch exponential learning-rate decay
"""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from src.network.architecture import NetworkGradients, NetworkParameters, parameter_arrays
from src.utils.exceptions import InvalidArgumentError, NumericError

DEFAULT_LEARNING_RATE = 1e-4
DEFAULT_DECAY_RATE = 0.95


@dataclass
class OptimizerState:
    """Adam moments and schedule for one network"""

    first_moment: Dict[str, np.ndarray]
    second_moment: Dict[str, np.ndarray]
    base_learning_rate: float = DEFAULT_LEARNING_RATE
    decay_rate: float = DEFAULT_DECAY_RATE
    epsilon: float = 1e-7
    beta1: float = 0.9
    beta2: float = 0.999
    step: int = 0
    epoch: int = 0

    @property
    def learning_rate(self) -> float:
        """Effective learning rate for the current epoch"""
        return self.base_learning_rate * self.decay_rate ** self.epoch


def init_optimizer(
    net: NetworkParameters,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    decay_rate: float = DEFAULT_DECAY_RATE,
    epsilon: float = 1e-7,
) -> OptimizerState:
    """
    Zeroed Adam state shaped like the network

    Args:
        net: Network whose parameters will be updated
        learning_rate: Base learning rate (> 0)
        decay_rate: Multiplicative decay per epoch, in (0, 1]
        epsilon: Adam denominator guard (> 0)

    Returns:
        OptimizerState
    """
    if learning_rate <= 0:
        raise InvalidArgumentError(f"learning rate must be > 0, got {learning_rate}")
    if not 0 < decay_rate <= 1:
        raise InvalidArgumentError(f"decay rate must be in (0, 1], got {decay_rate}")
    if epsilon <= 0:
        raise InvalidArgumentError(f"epsilon must be > 0, got {epsilon}")
    shapes = parameter_arrays(net)
    return OptimizerState(
        first_moment={name: np.zeros_like(array) for name, array in shapes},
        second_moment={name: np.zeros_like(array) for name, array in shapes},
        base_learning_rate=float(learning_rate),
        decay_rate=float(decay_rate),
        epsilon=float(epsilon),
    )


def adam_step(
    opt: OptimizerState, net: NetworkParameters, grads: NetworkGradients
) -> Tuple[NetworkParameters, OptimizerState]:
    """
    One bias-corrected Adam update, applied in place

    Args:
        opt: Optimizer state (mutated)
        net: Network parameters (mutated)
        grads: Gradients from backward()

    Returns:
        (net, opt) for chaining
    """
    params = parameter_arrays(net)
    for name, array in params:
        grad = grads.arrays.get(name)
        if grad is None or grad.shape != array.shape:
            raise InvalidArgumentError(f"gradient for {name} missing or mis-shaped")
        if not np.all(np.isfinite(grad)):
            raise NumericError("non-finite gradient", location=name)

    opt.step += 1
    lr = opt.learning_rate
    correction1 = 1.0 - opt.beta1 ** opt.step
    correction2 = 1.0 - opt.beta2 ** opt.step
    for name, array in params:
        grad = grads[name]
        m = opt.first_moment[name]
        v = opt.second_moment[name]
        m *= opt.beta1
        m += (1.0 - opt.beta1) * grad
        v *= opt.beta2
        v += (1.0 - opt.beta2) * grad * grad
        array -= lr * (m / correction1) / (np.sqrt(v / correction2) + opt.epsilon)
    return net, opt
