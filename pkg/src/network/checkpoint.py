"""
Binary checkpoint format for a single Evidence Network

Layout (little-endian):
    b"EVNN" | u32 version | u32 input_dim | u32 n_dense | n_dense x u32 widths
    | f64 slope | u32 n_batch_norm | f64 momentum | f64 epsilon
    | f64[input_dim] input_scale
    | per layer, in layer order: dense weight, dense bias,
      then for normalized blocks gamma, beta, running_mean, running_var
"""

import struct
from pathlib import Path
from typing import BinaryIO, List, Union

import numpy as np

from src.network.architecture import (
    BatchNormLayer,
    DenseLayer,
    NetworkParameters,
)
from src.utils.exceptions import InvalidArgumentError

MAGIC = b"EVNN"
FORMAT_VERSION = 1
_F64 = np.dtype("<f8")


def _write_array(f: BinaryIO, array: np.ndarray) -> None:
    f.write(np.ascontiguousarray(array, dtype=_F64).tobytes())


def _read_array(f: BinaryIO, shape) -> np.ndarray:
    count = int(np.prod(shape))
    raw = f.read(count * _F64.itemsize)
    if len(raw) != count * _F64.itemsize:
        raise InvalidArgumentError("checkpoint truncated")
    return np.frombuffer(raw, dtype=_F64).astype(np.float64).reshape(shape)


def _read(f: BinaryIO, fmt: str):
    size = struct.calcsize(fmt)
    raw = f.read(size)
    if len(raw) != size:
        raise InvalidArgumentError("checkpoint truncated")
    return struct.unpack(fmt, raw)


def save_checkpoint(net: NetworkParameters, path: Union[str, Path]) -> Path:
    """Write a network to an EVNN file; parent directories are created"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    widths = net.widths
    bn0 = net.batch_norm[0]
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", FORMAT_VERSION, net.input_dim))
        f.write(struct.pack(f"<I{len(widths)}I", len(widths), *widths))
        f.write(struct.pack("<d", net.slope))
        f.write(struct.pack("<Idd", len(net.batch_norm), bn0.momentum, bn0.epsilon))
        _write_array(f, net.input_scale)
        for i, layer in enumerate(net.dense):
            _write_array(f, layer.weight)
            _write_array(f, layer.bias)
            if i < len(net.batch_norm):
                bn = net.batch_norm[i]
                for array in (bn.gamma, bn.beta, bn.running_mean, bn.running_var):
                    _write_array(f, array)
    return path


def load_checkpoint(path: Union[str, Path]) -> NetworkParameters:
    """Read an EVNN file written by save_checkpoint"""
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise InvalidArgumentError(f"{path} is not an EVNN checkpoint")
        version, input_dim = _read(f, "<II")
        if version != FORMAT_VERSION:
            raise InvalidArgumentError(f"unsupported checkpoint version {version}")
        (n_dense,) = _read(f, "<I")
        widths: List[int] = list(_read(f, f"<{n_dense}I"))
        (slope,) = _read(f, "<d")
        n_bn, momentum, epsilon = _read(f, "<Idd")
        input_scale = _read_array(f, (input_dim,))

        dense, batch_norm = [], []
        fan_in = input_dim
        for i, width in enumerate(widths):
            dense.append(DenseLayer(
                weight=_read_array(f, (width, fan_in)),
                bias=_read_array(f, (width,)),
            ))
            if i < n_bn:
                gamma, beta, mean, var = (_read_array(f, (width,)) for _ in range(4))
                batch_norm.append(BatchNormLayer(gamma, beta, mean, var, momentum, epsilon))
            fan_in = width
        if f.read(1):
            raise InvalidArgumentError(f"{path} has trailing bytes")

    return NetworkParameters(
        input_dim=input_dim,
        width1=widths[0],
        slope=slope,
        dense=dense,
        batch_norm=batch_norm,
        input_scale=input_scale,
    )
