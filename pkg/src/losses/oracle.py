"""
Pointwise optimum of a designer loss

For densities p1 = p(x, M1) and p0 = p(x, M0) at a single x, the objective
g(f) = p1 V(f, 1) + p0 V(f, 0) is minimized by root-finding on g'(f). This is
the independent ground truth every decoder is checked against.
"""

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from src.losses.designer_losses import (
    EXP_CLAMP,
    PROBABILITY_FLOOR,
    PROBABILITY_KINDS,
    LossKind,
    LossSpec,
    loss_grad,
)
from src.utils.exceptions import DiagnosticError, InvalidArgumentError
from src.utils.logger import get_logger

logger = get_logger(__name__)

_BRACKET_LIMIT = 1e4
STATIONARITY_TOL = 1e-10


def _from_unbounded(spec: LossSpec, u: float) -> float:
    # optimize over an unconstrained coordinate; the map is monotone so roots coincide
    if spec.kind in PROBABILITY_KINDS:
        return float(np.clip(expit(u), PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR))
    if spec.kind is LossKind.ALPHA_LOG_EXPONENT:
        return float(np.exp(np.clip(u, -EXP_CLAMP, EXP_CLAMP)))
    return u


def optimal_f_oracle(spec: LossSpec, p1: float, p0: float) -> float:
    """
    Numerically minimize p1 V(f,1) + p0 V(f,0) over f

    Args:
        spec: Loss specification
        p1: Density of (x, M1), >= 0
        p0: Density of (x, M0), >= 0

    Returns:
        The minimizing loss argument f*

    Raises:
        DiagnosticError: If one density vanishes, the objective is unbounded below,
            or |g'(f*)| exceeds STATIONARITY_TOL * (p1 + p0) at the returned point
    """
    if p1 < 0 or p0 < 0 or not np.isfinite(p1) or not np.isfinite(p0):
        raise InvalidArgumentError(f"densities must be finite and non-negative, got p1={p1}, p0={p0}")
    total = p1 + p0
    if total <= 0:
        raise InvalidArgumentError("p1 + p0 must be positive")
    if p1 == 0 or p0 == 0:
        raise DiagnosticError(
            f"{spec.label}: objective has no interior minimum when one density vanishes"
        )
    w1, w0 = p1 / total, p0 / total

    def slope(u: float) -> float:
        f = _from_unbounded(spec, u)
        return w1 * loss_grad(spec, f, 1) + w0 * loss_grad(spec, f, 0)

    lo, hi = -1.0, 1.0
    while slope(lo) > 0:
        lo *= 2.0
        if lo < -_BRACKET_LIMIT:
            raise DiagnosticError(f"{spec.label}: objective decreases without bound as f -> -inf")
    while slope(hi) < 0:
        hi *= 2.0
        if hi > _BRACKET_LIMIT:
            raise DiagnosticError(f"{spec.label}: objective decreases without bound as f -> +inf")

    root, info = brentq(
        slope, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500, full_output=True, disp=False
    )
    if not info.converged:
        raise DiagnosticError(f"{spec.label}: derivative root search did not converge")

    f_star = _from_unbounded(spec, root)
    residual = total * abs(slope(root))
    logger.debug(f"{spec.label}: f*={f_star:.12g}, |g'(f*)|={residual:.3g}")
    if residual > STATIONARITY_TOL * total:
        raise DiagnosticError(
            f"{spec.label}: optimum f*={f_star:.17g} is not stationary, "
            f"|g'(f*)|={residual:.3g} exceeds {STATIONARITY_TOL:g}*(p1+p0)={STATIONARITY_TOL * total:.3g}"
        )
    return f_star
