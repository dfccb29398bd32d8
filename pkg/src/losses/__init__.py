"""
Designer losses, the l-POP transform, decoders and the pointwise optimum oracle
"""

from .transforms import lpop, lpop_inverse, lpop_grad
from .designer_losses import (
    LossKind,
    LossSpec,
    ModelPriorRatio,
    BatchLoss,
    parse_loss_kind,
    loss_value,
    loss_grad,
    batch_loss,
    output_link,
    output_link_grad,
    decode_log_k,
    decode_network_output,
    decode_posterior,
)
from .oracle import optimal_f_oracle

__all__ = [
    "lpop",
    "lpop_inverse",
    "lpop_grad",
    "LossKind",
    "LossSpec",
    "ModelPriorRatio",
    "BatchLoss",
    "parse_loss_kind",
    "loss_value",
    "loss_grad",
    "batch_loss",
    "output_link",
    "output_link_grad",
    "decode_log_k",
    "decode_network_output",
    "decode_posterior",
    "optimal_f_oracle",
]
