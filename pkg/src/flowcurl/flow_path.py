"""Probability path and conditional flow-matching targets.

The path interpolates between data x (t = 0) and noise eps (t = 1):

    z_t = a(t) x + b(t) eps,      v_t = a'(t) x + b'(t) eps,

and the network regresses v_theta(z_t, t) onto the conditional velocity
v_t.  The default schedule is the rectified linear one, a(t) = 1 - t,
b(t) = t, whose conditional velocity is eps - x independent of t.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, ShapeError


@dataclass(frozen=True)
class PathSchedule:
    """Interpolation coefficients a(t), b(t) and their derivatives."""

    a: Callable[[float], float]
    b: Callable[[float], float]
    da: Callable[[float], float]
    db: Callable[[float], float]
    name: str = "custom"


RECTIFIED_LINEAR = PathSchedule(
    a=lambda t: 1.0 - t,
    b=lambda t: t,
    da=lambda t: -1.0,
    db=lambda t: 1.0,
    name="rectified_linear",
)


def _check_t(t: np.ndarray):
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise DomainError("path time t must lie in [0, 1]")


def _check_pair(x: np.ndarray, eps: np.ndarray):
    if x.shape != eps.shape:
        raise ShapeError(f"x and eps must share a shape, got {x.shape} vs {eps.shape}")


def interpolate(x: np.ndarray, eps: np.ndarray, t: np.ndarray,
                schedule: PathSchedule = RECTIFIED_LINEAR) -> np.ndarray:
    """z_t = a(t) x + b(t) eps for a batch.

    x, eps: (n, d); t: (n,).  Returns (n, d).
    """
    x = np.asarray(x, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    _check_pair(x, eps)
    _check_t(t)
    a = np.array([schedule.a(ti) for ti in t])
    b = np.array([schedule.b(ti) for ti in t])
    return a[:, None] * x + b[:, None] * eps


def conditional_velocity(x: np.ndarray, eps: np.ndarray, t: np.ndarray,
                         schedule: PathSchedule = RECTIFIED_LINEAR) -> np.ndarray:
    """v_t = a'(t) x + b'(t) eps; for the rectified linear path this is eps - x."""
    x = np.asarray(x, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    _check_pair(x, eps)
    _check_t(t)
    da = np.array([schedule.da(ti) for ti in t])
    db = np.array([schedule.db(ti) for ti in t])
    return da[:, None] * x + db[:, None] * eps


def cfm_residual(pred_v: np.ndarray, x: np.ndarray, eps: np.ndarray, t: np.ndarray,
                 schedule: PathSchedule = RECTIFIED_LINEAR) -> np.ndarray:
    """pred_v - v_t, the quantity whose squared norm is the CFM loss."""
    target = conditional_velocity(x, eps, t, schedule)
    pred_v = np.asarray(pred_v, dtype=np.float64)
    if pred_v.shape != target.shape:
        raise ShapeError(f"pred_v shape {pred_v.shape} does not match target {target.shape}")
    return pred_v - target


def adaptive_weight(sq_err: np.ndarray, p: float, c: float) -> np.ndarray:
    """Per-sample loss weight w = (sq_err + c)^(-p), treated as a constant.

    p = 0 recovers unit weights.  The weight is computed from the current
    squared error with no gradient flowing through it (stop-gradient).
    """
    if p < 0.0:
        raise DomainError(f"weight exponent p must be >= 0, got {p}")
    if c <= 0.0:
        raise DomainError(f"weight floor c must be > 0, got {c}")
    sq_err = np.asarray(sq_err, dtype=np.float64)
    if p == 0.0:
        return np.ones_like(sq_err)
    return np.power(sq_err + c, -p)
