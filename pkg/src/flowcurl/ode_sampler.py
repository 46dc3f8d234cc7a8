"""Explicit Euler integration of the learned flow, from noise to data.

The probability-flow ODE dz/dt = v(z, t) is integrated backwards in time
on the fixed grid t_k = 1 - k/N, k = 0..N-1:

    z_{k+1} = z_k - (1/N) v(z_k, t_k),

so z_0 ~ N(0, I) at t = 1 becomes a data sample at t = 0 after exactly N
velocity evaluations (NFE = N).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergenceError, ParameterError
from .neural_field import MlpConfig, forward
from .rng import Rng


@dataclass(frozen=True)
class SolverConfig:
    nfe: int = 50
    divergence_norm: float = 1e6

    def __post_init__(self):
        if self.nfe < 1:
            raise ParameterError(f"nfe must be >= 1, got {self.nfe}")
        if self.divergence_norm <= 0.0:
            raise ParameterError(
                f"divergence_norm must be > 0, got {self.divergence_norm}")


def euler_generate(velocity: Callable[[np.ndarray, float], np.ndarray],
                   eps: np.ndarray,
                   solver: SolverConfig = SolverConfig()) -> np.ndarray:
    """Integrate eps at t = 1 down to t = 0 with N = solver.nfe Euler steps.

    velocity maps ((n, d) state, scalar t) -> (n, d).  Raises
    DivergenceError the first time any row's norm exceeds the configured
    bound, reporting the offending step and row.
    """
    z = np.array(eps, dtype=np.float64, copy=True)
    if z.ndim != 2:
        raise ParameterError(f"eps must be (n, d), got shape {z.shape}")
    n_steps = solver.nfe
    h = 1.0 / n_steps
    for k in range(n_steps):
        t_k = 1.0 - k / n_steps
        z -= h * velocity(z, t_k)
        norms = np.sqrt(np.sum(z * z, axis=1))
        bad = np.flatnonzero(~(norms <= solver.divergence_norm))
        if bad.size:
            raise DivergenceError(step=k, row=int(bad[0]))
    return z


def model_velocity(params: np.ndarray, config: MlpConfig) -> Callable:
    """Wrap network parameters as a velocity callable for the solver."""

    def velocity(z: np.ndarray, t: float) -> np.ndarray:
        t_vec = np.full(z.shape[0], t)
        return forward(params, z, t_vec, config)

    return velocity


def batch_generate(params: np.ndarray, config: MlpConfig, rng: Rng, n: int,
                   solver: SolverConfig = SolverConfig(),
                   chunk: int = 4096) -> np.ndarray:
    """Draw n samples from the model, integrating in fixed-size chunks."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    velocity = model_velocity(params, config)
    out = np.empty((n, config.dim), dtype=np.float64)
    pos = 0
    while pos < n:
        m = min(chunk, n - pos)
        eps = rng.normal(m * config.dim).reshape(m, config.dim)
        out[pos:pos + m] = euler_generate(velocity, eps, solver)
        pos += m
    return out
