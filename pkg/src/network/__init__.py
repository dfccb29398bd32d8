"""
Evidence Network engine: architecture, gradients, optimizer and checkpoints
"""

from .architecture import (
    Mode,
    NetworkParameters,
    ForwardTrace,
    NetworkGradients,
    init_network,
    forward,
    backward,
    first_width,
    leaky_relu,
    count_parameters,
    copy_network,
    parameter_arrays,
    parameter_vector,
    set_parameter_vector,
    gradient_vector,
)
from .optimizer import OptimizerState, init_optimizer, adam_step
from .checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    "Mode",
    "NetworkParameters",
    "ForwardTrace",
    "NetworkGradients",
    "init_network",
    "forward",
    "backward",
    "first_width",
    "leaky_relu",
    "count_parameters",
    "copy_network",
    "parameter_arrays",
    "parameter_vector",
    "set_parameter_vector",
    "gradient_vector",
    "OptimizerState",
    "init_optimizer",
    "adam_step",
    "save_checkpoint",
    "load_checkpoint",
]
