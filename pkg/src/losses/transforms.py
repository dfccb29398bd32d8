"""
Leaky parity-odd power (l-POP) transform

    J_alpha(x) = x + x |x|^(alpha - 1),  alpha >= 1

J is odd, strictly increasing and differentiable everywhere. The derivative
is evaluated from its closed form 1 + alpha |x|^(alpha - 1), never through the
sign or absolute-value intermediates.
"""

from typing import Union

import numpy as np
from scipy.optimize import brentq

from src.utils.exceptions import InvalidArgumentError, NumericError

ArrayLike = Union[float, np.ndarray]


def _check_alpha(alpha: float) -> None:
    if not np.isfinite(alpha) or alpha < 1:
        raise InvalidArgumentError(f"l-POP requires alpha >= 1, got {alpha}")


def _as_output(values: np.ndarray, like) -> ArrayLike:
    return float(values) if np.ndim(like) == 0 else values


def lpop(x: ArrayLike, alpha: float = 2.0) -> ArrayLike:
    """
    Apply the l-POP transform

    Args:
        x: Real value(s)
        alpha: Power, >= 1

    Returns:
        J_alpha(x), same shape as x
    """
    _check_alpha(alpha)
    x_arr = np.asarray(x, dtype=np.float64)
    return _as_output(x_arr + x_arr * np.abs(x_arr) ** (alpha - 1.0), x)


def lpop_grad(x: ArrayLike, alpha: float = 2.0) -> ArrayLike:
    """dJ/dx = 1 + alpha |x|^(alpha - 1); equals 2 everywhere for alpha = 1"""
    _check_alpha(alpha)
    x_arr = np.asarray(x, dtype=np.float64)
    return _as_output(1.0 + alpha * np.abs(x_arr) ** (alpha - 1.0), x)


def _inverse_magnitude(z: float, alpha: float) -> float:
    # J(b) >= |z| for b = min(|z|, |z|^(1/alpha)), so [0, b] brackets the root
    if z == 0.0:
        return 0.0
    upper = min(z, z ** (1.0 / alpha))
    if upper + upper ** alpha == z:
        return upper
    root, info = brentq(
        lambda y: y + y ** alpha - z,
        0.0,
        upper,
        xtol=1e-15,
        rtol=4 * np.finfo(float).eps,
        disp=False,
        maxiter=500,
        full_output=True,
    )
    if not info.converged:
        raise NumericError(f"l-POP inverse did not converge for z={z}, alpha={alpha}")
    return root


def lpop_inverse(z: ArrayLike, alpha: float = 2.0) -> ArrayLike:
    """
    Invert the l-POP transform

    alpha = 1 and alpha = 2 have closed forms; other powers use bracketed
    root finding on the magnitude, then restore the sign.

    Args:
        z: Transformed value(s), finite
        alpha: Power, >= 1

    Returns:
        y with J_alpha(y) = z
    """
    _check_alpha(alpha)
    z_arr = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z_arr)):
        raise InvalidArgumentError("l-POP inverse requires finite input")

    magnitude = np.abs(z_arr)
    if alpha == 1.0:
        y = magnitude / 2.0
    elif alpha == 2.0:
        # (-1 + sqrt(1 + 4|z|)) / 2, written without cancellation
        y = 2.0 * magnitude / (1.0 + np.sqrt(1.0 + 4.0 * magnitude))
    else:
        y = np.vectorize(lambda m: _inverse_magnitude(float(m), alpha), otypes=[np.float64])(magnitude)
    return _as_output(np.sign(z_arr) * y, z)
