"""Adam with linear warmup and an exponential moving average of weights."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OptimizerError, ParameterError


@dataclass(frozen=True)
class LrSchedule:
    base_lr: float
    warmup_steps: int = 0

    def __post_init__(self):
        if self.base_lr <= 0.0:
            raise ParameterError(f"base_lr must be > 0, got {self.base_lr}")
        if self.warmup_steps < 0:
            raise ParameterError(f"warmup_steps must be >= 0, got {self.warmup_steps}")


def lr_at(schedule: LrSchedule, step: int) -> float:
    """Linear warmup from 0 to base_lr over warmup_steps, then constant."""
    if schedule.warmup_steps == 0:
        return schedule.base_lr
    return schedule.base_lr * min(1.0, (step + 1) / schedule.warmup_steps)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, n_params: int, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> "AdamState":
        if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
            raise ParameterError(f"betas must lie in [0, 1), got ({beta1}, {beta2})")
        return cls(m=np.zeros(n_params), v=np.zeros(n_params),
                   beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: np.ndarray, grad: np.ndarray, state: AdamState,
              lr: float) -> np.ndarray:
    """One bias-corrected Adam update; mutates state, returns new params."""
    if grad.shape != params.shape:
        raise OptimizerError(f"grad shape {grad.shape} != params shape {params.shape}")
    if not np.all(np.isfinite(grad)):
        raise OptimizerError(f"non-finite gradient at optimizer step {state.step}")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    return params - lr * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass
class EmaState:
    decay: float
    shadow: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if not 0.0 <= self.decay < 1.0:
            raise ParameterError(f"EMA decay must lie in [0, 1), got {self.decay}")


def ema_update(state: EmaState, params: np.ndarray):
    """shadow <- decay * shadow + (1 - decay) * params (copies on first call)."""
    if state.shadow is None:
        state.shadow = params.copy()
    else:
        state.shadow *= state.decay
        state.shadow += (1.0 - state.decay) * params
