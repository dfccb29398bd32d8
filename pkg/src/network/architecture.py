"""
Evidence Network architecture: a small dense network with batch normalization

Topology (one row per layer, hidden width 16 after the first block):

    dense_0 (input -> width1) -> leaky ReLU -> batch_norm_0
    dense_1 (width1 -> 16)    -> leaky ReLU -> batch_norm_1   (skip source)
    dense_2 (16 -> 16)        -> leaky ReLU -> batch_norm_2
    dense_3 (16 -> 16)        -> leaky ReLU -> (+ batch_norm_1) -> batch_norm_3
    dense_4 (16 -> 16)        -> leaky ReLU
    dense_5 (16 -> 1)

Gradients are computed by hand in reverse mode, including the path through
batch statistics. All arithmetic is float64.
"""

import copy
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.utils.exceptions import InvalidArgumentError
from src.utils.seeding import STREAM_INIT, make_rng

LEAKY_SLOPE = 0.3
BN_MOMENTUM = 0.99
BN_EPSILON = 1e-3
HIDDEN_WIDTH = 16
N_NORMALIZED_BLOCKS = 4
SKIP_SOURCE = 1  # batch_norm_1 output is added back in ...
SKIP_TARGET = 3  # ... right before batch_norm_3


class Mode(str, Enum):
    TRAINING = "training"
    INFERENCE = "inference"


@dataclass
class DenseLayer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)


@dataclass
class BatchNormLayer:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = BN_MOMENTUM
    epsilon: float = BN_EPSILON


@dataclass
class NetworkParameters:
    """All trainable weights plus batch-norm state of one Evidence Network"""

    input_dim: int
    width1: int
    slope: float
    dense: List[DenseLayer]
    batch_norm: List[BatchNormLayer]
    input_scale: np.ndarray = field(default=None)  # fixed per-feature divisor, not trained

    def __post_init__(self):
        if self.input_scale is None:
            self.input_scale = np.ones(self.input_dim)

    @property
    def widths(self) -> List[int]:
        """Output width of every dense layer, in order"""
        return [layer.weight.shape[0] for layer in self.dense]


@dataclass
class ForwardTrace:
    """Cached intermediates of one forward pass; valid only for the batch that produced it"""

    mode: Mode
    inputs: np.ndarray
    pre_activations: List[np.ndarray]
    post_activations: List[np.ndarray]
    block_outputs: List[np.ndarray]
    normalized: List[np.ndarray]
    batch_std: List[np.ndarray]

    @property
    def batch_size(self) -> int:
        return self.inputs.shape[0]

    @property
    def layer_count(self) -> int:
        return len(self.pre_activations)


@dataclass
class NetworkGradients:
    """Gradients keyed by parameter name, same names and shapes as parameter_arrays()"""

    arrays: Dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def items(self):
        return self.arrays.items()


def first_width(input_dim: int) -> int:
    """width1 = input_dim * 1.1 + 20, rounded half up"""
    return int(math.floor(input_dim * 1.1 + 20 + 0.5))


def leaky_relu(x: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    return np.where(x > 0, x, slope * x)


def leaky_relu_grad(x: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    return np.where(x > 0, 1.0, slope)


def init_network(input_dim: int, seed: int, slope: float = LEAKY_SLOPE) -> NetworkParameters:
    """
    Create a freshly initialized network

    Weights are zero-mean Gaussian with variance 2 / (fan_in * (1 + slope^2));
    biases start at zero; batch norms start as the identity map.

    Args:
        input_dim: Length of each data vector
        seed: Initialization seed; identical seeds give bit-identical networks
        slope: Leaky ReLU negative slope

    Returns:
        NetworkParameters
    """
    if int(input_dim) < 1:
        raise InvalidArgumentError(f"input_dim must be >= 1, got {input_dim}")
    input_dim = int(input_dim)
    rng = make_rng(seed, STREAM_INIT)
    width1 = first_width(input_dim)
    widths = [width1] + [HIDDEN_WIDTH] * 4 + [1]

    dense = []
    fan_in = input_dim
    for width in widths:
        std = math.sqrt(2.0 / (fan_in * (1.0 + slope ** 2)))
        dense.append(DenseLayer(
            weight=rng.normal(0.0, std, size=(width, fan_in)),
            bias=np.zeros(width),
        ))
        fan_in = width

    batch_norm = [
        BatchNormLayer(
            gamma=np.ones(width),
            beta=np.zeros(width),
            running_mean=np.zeros(width),
            running_var=np.ones(width),
        )
        for width in widths[:N_NORMALIZED_BLOCKS]
    ]
    return NetworkParameters(
        input_dim=input_dim,
        width1=width1,
        slope=float(slope),
        dense=dense,
        batch_norm=batch_norm,
    )


def parameter_arrays(net: NetworkParameters) -> List[Tuple[str, np.ndarray]]:
    """
    Trainable arrays in layer order (references, not copies)

    Order: dense_0, batch_norm_0, dense_1, batch_norm_1, ..., dense_4, dense_5.
    """
    arrays = []
    for i, layer in enumerate(net.dense):
        arrays.append((f"dense_{i}.weight", layer.weight))
        arrays.append((f"dense_{i}.bias", layer.bias))
        if i < len(net.batch_norm):
            bn = net.batch_norm[i]
            arrays.append((f"batch_norm_{i}.gamma", bn.gamma))
            arrays.append((f"batch_norm_{i}.beta", bn.beta))
    return arrays


def count_parameters(net: NetworkParameters) -> int:
    return sum(array.size for _, array in parameter_arrays(net))


def parameter_vector(net: NetworkParameters) -> np.ndarray:
    """Flatten all trainable parameters into one vector"""
    return np.concatenate([array.ravel() for _, array in parameter_arrays(net)])


def set_parameter_vector(net: NetworkParameters, vector: np.ndarray) -> None:
    """Inverse of parameter_vector; writes in place"""
    offset = 0
    for _, array in parameter_arrays(net):
        array[...] = vector[offset:offset + array.size].reshape(array.shape)
        offset += array.size
    if offset != vector.size:
        raise InvalidArgumentError(f"vector has {vector.size} entries, network has {offset}")


def gradient_vector(grads: NetworkGradients) -> np.ndarray:
    return np.concatenate([array.ravel() for _, array in grads.items()])


def copy_network(net: NetworkParameters) -> NetworkParameters:
    return copy.deepcopy(net)


def _batch_norm_forward(
    bn: BatchNormLayer, x: np.ndarray, mode: Mode
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if mode is Mode.TRAINING:
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        bn.running_mean = bn.momentum * bn.running_mean + (1.0 - bn.momentum) * mean
        bn.running_var = bn.momentum * bn.running_var + (1.0 - bn.momentum) * var
    else:
        mean = bn.running_mean
        var = bn.running_var
    std = np.sqrt(var + bn.epsilon)
    x_hat = (x - mean) / std
    return bn.gamma * x_hat + bn.beta, x_hat, std


def forward(
    net: NetworkParameters, batch: np.ndarray, mode: Mode = Mode.INFERENCE
) -> Tuple[np.ndarray, ForwardTrace]:
    """
    Evaluate the raw network output f(x) for every row of a batch

    Training mode normalizes with batch statistics and updates the running
    statistics; inference mode uses running statistics and mutates nothing.

    Args:
        net: Network parameters
        batch: (n, input_dim) data matrix
        mode: Mode.TRAINING or Mode.INFERENCE

    Returns:
        (outputs of length n, ForwardTrace)
    """
    mode = Mode(mode)
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != net.input_dim:
        raise InvalidArgumentError(
            f"batch must have shape (n, {net.input_dim}), got {batch.shape}"
        )
    if mode is Mode.TRAINING and batch.shape[0] < 2:
        raise InvalidArgumentError("training-mode forward needs at least 2 rows for batch statistics")

    inputs = batch / net.input_scale
    pre, post, blocks, normalized, stds = [], [], [], [], []

    z = inputs
    for i, bn in enumerate(net.batch_norm):
        layer = net.dense[i]
        h = z @ layer.weight.T + layer.bias
        a = leaky_relu(h, net.slope)
        pre.append(h)
        post.append(a)
        if i == SKIP_TARGET:
            a = a + blocks[SKIP_SOURCE]
        z, x_hat, std = _batch_norm_forward(bn, a, mode)
        blocks.append(z)
        normalized.append(x_hat)
        stds.append(std)

    for layer in net.dense[len(net.batch_norm):-1]:
        h = z @ layer.weight.T + layer.bias
        z = leaky_relu(h, net.slope)
        pre.append(h)
        post.append(z)

    head = net.dense[-1]
    out = z @ head.weight.T + head.bias
    pre.append(out)

    trace = ForwardTrace(
        mode=mode,
        inputs=inputs,
        pre_activations=pre,
        post_activations=post,
        block_outputs=blocks,
        normalized=normalized,
        batch_std=stds,
    )
    return out[:, 0], trace


def _batch_norm_backward(
    bn: BatchNormLayer, x_hat: np.ndarray, std: np.ndarray, dy: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = x_hat.shape[0]
    dgamma = np.sum(dy * x_hat, axis=0)
    dbeta = np.sum(dy, axis=0)
    dx_hat = dy * bn.gamma
    dx = (n * dx_hat - dx_hat.sum(axis=0) - x_hat * np.sum(dx_hat * x_hat, axis=0)) / (n * std)
    return dx, dgamma, dbeta


def backward(
    net: NetworkParameters, trace: ForwardTrace, output_grads: np.ndarray
) -> NetworkGradients:
    """
    Reverse-mode gradients of (1/n) * sum_i output_grads[i] * f(x_i)

    Args:
        net: The network that produced the trace
        trace: Training-mode trace of the same batch
        output_grads: dLoss/df per row, length n

    Returns:
        NetworkGradients keyed like parameter_arrays()
    """
    output_grads = np.asarray(output_grads, dtype=np.float64)
    n = trace.batch_size
    if trace.mode is not Mode.TRAINING:
        raise InvalidArgumentError("backward needs a training-mode trace")
    if trace.layer_count != len(net.dense) or len(trace.normalized) != len(net.batch_norm):
        raise InvalidArgumentError("trace does not match the network layer count")
    if trace.inputs.shape[1] != net.input_dim or trace.pre_activations[0].shape[1] != net.width1:
        raise InvalidArgumentError("trace was produced by a network with different widths")
    if output_grads.shape != (n,):
        raise InvalidArgumentError(f"output_grads must have length {n}, got {output_grads.shape}")

    grads: Dict[str, np.ndarray] = {}
    n_blocks = len(net.batch_norm)
    pre, post, blocks = trace.pre_activations, trace.post_activations, trace.block_outputs

    def layer_input(i: int) -> np.ndarray:
        if i == 0:
            return trace.inputs
        if i <= n_blocks:
            return blocks[i - 1]
        return post[i - 1]

    # output head
    last = len(net.dense) - 1
    d_out = (output_grads / n)[:, None]
    grads[f"dense_{last}.weight"] = d_out.T @ layer_input(last)
    grads[f"dense_{last}.bias"] = d_out.sum(axis=0)
    dz = d_out @ net.dense[last].weight

    # un-normalized dense layers between the blocks and the head
    for i in range(last - 1, n_blocks - 1, -1):
        dh = dz * leaky_relu_grad(pre[i], net.slope)
        grads[f"dense_{i}.weight"] = dh.T @ layer_input(i)
        grads[f"dense_{i}.bias"] = dh.sum(axis=0)
        dz = dh @ net.dense[i].weight

    skip_grad: Optional[np.ndarray] = None
    for i in range(n_blocks - 1, -1, -1):
        if i == SKIP_SOURCE and skip_grad is not None:
            dz = dz + skip_grad
        da, dgamma, dbeta = _batch_norm_backward(
            net.batch_norm[i], trace.normalized[i], trace.batch_std[i], dz
        )
        grads[f"batch_norm_{i}.gamma"] = dgamma
        grads[f"batch_norm_{i}.beta"] = dbeta
        if i == SKIP_TARGET:
            skip_grad = da
        dh = da * leaky_relu_grad(pre[i], net.slope)
        grads[f"dense_{i}.weight"] = dh.T @ layer_input(i)
        grads[f"dense_{i}.bias"] = dh.sum(axis=0)
        dz = dh @ net.dense[i].weight

    ordered = {name: grads[name] for name, _ in parameter_arrays(net)}
    return NetworkGradients(arrays=ordered)
