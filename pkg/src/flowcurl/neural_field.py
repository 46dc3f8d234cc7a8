"""Velocity-field MLP with explicit reverse-mode gradients.

Parameters live in one flat float64 vector (layer-major: W then b per
layer, W flattened row-major with shape (fan_in, fan_out)).  The forward
pass records a tape of layer inputs and pre-activations; backward walks
it in reverse and fills a flat gradient of the same length.  All heavy
lifting is batched matrix products, so BLAS does the arithmetic and the
results are bit-reproducible for a fixed batch.

The time coordinate enters through a Fourier feature embedding
[t, sin(2 pi t), cos(2 pi t), sin(4 pi t), cos(4 pi t), ...] appended to
the spatial input, with freq_bands octaves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ParameterError, ShapeError
from .rng import Rng

_ACTIVATIONS = ("silu", "relu", "tanh")


@dataclass(frozen=True)
class MlpConfig:
    dim: int = 2
    hidden: tuple = (256, 256, 256)
    freq_bands: int = 4
    activation: str = "silu"

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError(f"dim must be >= 1, got {self.dim}")
        if self.freq_bands < 0:
            raise ParameterError(f"freq_bands must be >= 0, got {self.freq_bands}")
        if any(h < 1 for h in self.hidden):
            raise ParameterError(f"hidden widths must be >= 1, got {self.hidden}")
        if self.activation not in _ACTIVATIONS:
            raise ParameterError(
                f"activation must be one of {_ACTIVATIONS}, got {self.activation!r}")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @property
    def in_dim(self) -> int:
        # spatial dims + raw t + sin/cos per octave
        return self.dim + 1 + 2 * self.freq_bands

    @property
    def layer_dims(self) -> tuple:
        return (self.in_dim,) + self.hidden + (self.dim,)

    @property
    def param_count(self) -> int:
        dims = self.layer_dims
        return sum(m * n + n for m, n in zip(dims[:-1], dims[1:]))


def time_embed(t: np.ndarray, freq_bands: int) -> np.ndarray:
    """(n,) times -> (n, 1 + 2*freq_bands) Fourier features."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    cols = [t]
    for j in range(freq_bands):
        w = 2.0 * math.pi * (2.0 ** j)
        cols.append(np.sin(w * t))
        cols.append(np.cos(w * t))
    return np.stack(cols, axis=1)


def init_params(config: MlpConfig, rng: Rng) -> np.ndarray:
    """Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases."""
    out = np.empty(config.param_count, dtype=np.float64)
    pos = 0
    dims = config.layer_dims
    for m, n in zip(dims[:-1], dims[1:]):
        bound = math.sqrt(6.0 / m)
        w = rng.uniform(m * n)
        out[pos:pos + m * n] = (2.0 * w - 1.0) * bound
        pos += m * n
        out[pos:pos + n] = 0.0
        pos += n
    return out


def unpack_params(params: np.ndarray, config: MlpConfig) -> list:
    """Flat vector -> [(W, b), ...] views (no copies)."""
    if params.shape != (config.param_count,):
        raise ShapeError(
            f"expected {config.param_count} parameters, got shape {params.shape}")
    pairs = []
    pos = 0
    dims = config.layer_dims
    for m, n in zip(dims[:-1], dims[1:]):
        w = params[pos:pos + m * n].reshape(m, n)
        pos += m * n
        b = params[pos:pos + n]
        pos += n
        pairs.append((w, b))
    return pairs


def _act(pre: np.ndarray, kind: str) -> np.ndarray:
    if kind == "silu":
        return pre / (1.0 + np.exp(-pre))
    if kind == "relu":
        return np.maximum(pre, 0.0)
    return np.tanh(pre)


def _act_grad(pre: np.ndarray, kind: str) -> np.ndarray:
    if kind == "silu":
        sig = 1.0 / (1.0 + np.exp(-pre))
        return sig * (1.0 + pre * (1.0 - sig))
    if kind == "relu":
        return (pre > 0.0).astype(np.float64)
    th = np.tanh(pre)
    return 1.0 - th * th


@dataclass
class Tape:
    """Forward-pass record consumed by backward()."""

    config: MlpConfig
    inputs: list = field(default_factory=list)   # layer inputs h_{l-1}, one per layer
    pres: list = field(default_factory=list)     # pre-activations, hidden layers only


def forward(params: np.ndarray, z: np.ndarray, t: np.ndarray, config: MlpConfig,
            need_tape: bool = False):
    """Velocity prediction v_theta(z, t).

    z: (n, dim); t: (n,).  Returns (n, dim), or (out, tape) when
    need_tape is set.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != config.dim:
        raise ShapeError(f"z must be (n, {config.dim}), got {z.shape}")
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if t.shape != (z.shape[0],):
        raise ShapeError(f"t must be ({z.shape[0]},), got {t.shape}")

    h = np.concatenate([z, time_embed(t, config.freq_bands)], axis=1)
    pairs = unpack_params(np.asarray(params, dtype=np.float64), config)
    tape = Tape(config=config) if need_tape else None
    n_layers = len(pairs)
    for i, (w, b) in enumerate(pairs):
        if tape is not None:
            tape.inputs.append(h)
        pre = h @ w + b
        if i < n_layers - 1:
            if tape is not None:
                tape.pres.append(pre)
            h = _act(pre, config.activation)
        else:
            h = pre
    if need_tape:
        return h, tape
    return h


def backward(tape: Tape, params: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """d(loss)/d(params) given d(loss)/d(output), as one flat vector."""
    config = tape.config
    pairs = unpack_params(np.asarray(params, dtype=np.float64), config)
    grad = np.zeros_like(params, dtype=np.float64)
    gpairs = unpack_params(grad, config)

    g = np.asarray(grad_out, dtype=np.float64)
    if g.shape != (tape.inputs[0].shape[0], config.dim):
        raise ShapeError(
            f"grad_out must be ({tape.inputs[0].shape[0]}, {config.dim}), got {g.shape}")

    for i in range(len(pairs) - 1, -1, -1):
        w, _ = pairs[i]
        gw, gb = gpairs[i]
        h_in = tape.inputs[i]
        np.matmul(h_in.T, g, out=gw)
        np.sum(g, axis=0, out=gb)
        if i > 0:
            g = g @ w.T
            g *= _act_grad(tape.pres[i - 1], config.activation)
    return grad


def loss_and_grad(params: np.ndarray, z: np.ndarray, t: np.ndarray,
                  target_v: np.ndarray, config: MlpConfig,
                  weights: Optional[np.ndarray] = None):
    """Weighted CFM loss and its parameter gradient.

    loss = mean_i w_i ||v_theta(z_i, t_i) - target_v_i||^2 with w_i held
    constant (no gradient through the weights).  Returns (loss, grad,
    per-sample squared errors).
    """
    pred, tape = forward(params, z, t, config, need_tape=True)
    resid = pred - np.asarray(target_v, dtype=np.float64)
    sq_err = np.sum(resid * resid, axis=1)
    n = resid.shape[0]
    if weights is None:
        loss = float(np.mean(sq_err))
        grad_out = (2.0 / n) * resid
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (n,):
            raise ShapeError(f"weights must be ({n},), got {weights.shape}")
        loss = float(np.mean(weights * sq_err))
        grad_out = (2.0 / n) * weights[:, None] * resid
    grad = backward(tape, params, grad_out)
    return loss, grad, sq_err
