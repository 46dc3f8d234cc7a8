"""Run configuration: flat key = value text with bracketed section headers.

The sections are cosmetic grouping; keys are globally unique and exactly
these sixteen: dataset, sampler, hidden, time_features, activation,
batch_size, total_steps, lr, warmup, ema_decay, adaptive_p, adaptive_c,
eval_every, nfe, profile_bins, seed.  parse_config(render_config(cfg))
round-trips exactly.  A run's identity is a content hash of its rendered
text, so the id pins every field including the seed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import Tuple

from .datasets import DatasetVariant, GaussianMixture, parse_dataset, render_dataset
from .errors import ConfigError, ParameterError
from .neural_field import MlpConfig
from .timesteps import (TimestepDistribution, Uniform, parse_distribution,
                        render_distribution)

CONFIG_KEYS = ("dataset", "sampler", "hidden", "time_features", "activation",
               "batch_size", "total_steps", "lr", "warmup", "ema_decay",
               "adaptive_p", "adaptive_c", "eval_every", "nfe", "profile_bins",
               "seed")

_SECTIONS = (
    ("data", ("dataset",)),
    ("model", ("hidden", "time_features", "activation")),
    ("schedule", ("sampler",)),
    ("optim", ("batch_size", "total_steps", "lr", "warmup", "ema_decay",
               "adaptive_p", "adaptive_c")),
    ("run", ("eval_every", "nfe", "profile_bins", "seed")),
)


@dataclass(frozen=True)
class TrainConfig:
    dataset: DatasetVariant = GaussianMixture()
    sampler: TimestepDistribution = Uniform()
    hidden: Tuple[int, ...] = (256, 256, 256)
    time_features: int = 4
    activation: str = "silu"
    batch_size: int = 256
    total_steps: int = 20000
    lr: float = 1e-3
    warmup: int = 500
    ema_decay: float = 0.999
    adaptive_p: float = 0.0
    adaptive_c: float = 1e-3
    eval_every: int = 1000
    nfe: int = 50
    profile_bins: int = 64
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.total_steps < 1:
            raise ParameterError(f"total_steps must be >= 1, got {self.total_steps}")
        if self.batch_size < 1:
            raise ParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.profile_bins < 2:
            raise ParameterError(f"profile_bins must be >= 2, got {self.profile_bins}")
        if self.eval_every < 1:
            raise ParameterError(f"eval_every must be >= 1, got {self.eval_every}")
        if self.nfe < 1:
            raise ParameterError(f"nfe must be >= 1, got {self.nfe}")
        if self.lr <= 0.0:
            raise ParameterError(f"lr must be > 0, got {self.lr}")
        if self.warmup < 0:
            raise ParameterError(f"warmup must be >= 0, got {self.warmup}")
        if not 0.0 <= self.ema_decay < 1.0:
            raise ParameterError(f"ema_decay must lie in [0, 1), got {self.ema_decay}")
        if self.adaptive_p < 0.0:
            raise ParameterError(f"adaptive_p must be >= 0, got {self.adaptive_p}")
        if self.adaptive_c <= 0.0:
            raise ParameterError(f"adaptive_c must be > 0, got {self.adaptive_c}")
        if self.seed < 0:
            raise ParameterError(f"seed must be >= 0, got {self.seed}")
        # constructing these validates hidden/time_features/activation/dataset
        self.mlp_config()

    def mlp_config(self) -> MlpConfig:
        from .datasets import DatasetSpec
        dim = DatasetSpec(variant=self.dataset).dim
        return MlpConfig(dim=dim, hidden=self.hidden,
                         freq_bands=self.time_features, activation=self.activation)


def _render_value(key: str, cfg: TrainConfig) -> str:
    if key == "dataset":
        return render_dataset(cfg.dataset)
    if key == "sampler":
        return render_distribution(cfg.sampler)
    if key == "hidden":
        return ",".join(str(h) for h in cfg.hidden)
    value = getattr(cfg, key)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_config(cfg: TrainConfig) -> str:
    lines = []
    for section, keys in _SECTIONS:
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {_render_value(key, cfg)}")
        lines.append("")
    return "\n".join(lines)


_INT_KEYS = ("time_features", "batch_size", "total_steps", "warmup",
             "eval_every", "nfe", "profile_bins", "seed")
_FLOAT_KEYS = ("lr", "ema_decay", "adaptive_p", "adaptive_c")


def parse_config(text: str) -> TrainConfig:
    """Parse the flat key = value format; all sixteen keys required."""
    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if s.startswith("["):
            if not s.endswith("]") or len(s) < 3:
                raise ConfigError(f"malformed section header on line {lineno}: {line!r}")
            continue
        key, eq, value = s.partition("=")
        if not eq:
            raise ConfigError(f"expected 'key = value' on line {lineno}: {line!r}")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r} on line {lineno}")
        if key in raw:
            raise ConfigError(f"duplicate config key {key!r} on line {lineno}")
        raw[key] = value.strip()
    missing = [k for k in CONFIG_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")

    kwargs: dict = {
        "dataset": parse_dataset(raw["dataset"]),
        "sampler": parse_distribution(raw["sampler"]),
        "activation": raw["activation"],
    }
    try:
        kwargs["hidden"] = tuple(int(h) for h in raw["hidden"].split(",")) \
            if raw["hidden"] else ()
        for key in _INT_KEYS:
            kwargs[key] = int(raw[key])
        for key in _FLOAT_KEYS:
            kwargs[key] = float(raw[key])
    except ValueError as e:
        raise ConfigError(f"bad numeric value in config: {e}") from e
    return TrainConfig(**kwargs)


def run_id(cfg: TrainConfig) -> str:
    """Short content hash naming the run directory."""
    return hashlib.sha256(render_config(cfg).encode("utf-8")).hexdigest()[:12]


def preset(name: str) -> TrainConfig:
    """Named baseline configs.

    desk: the default 20k-step setup sized for a single CPU.
    full-scale: the large-run recipe (batch 1024, 150k steps, lr 6e-4,
        10k warmup, EMA 0.99995).
    weighted: desk plus adaptive loss weighting (p = 0.75, c = 1e-3).
    """
    base = TrainConfig()
    if name == "desk":
        return base
    if name == "full-scale":
        return replace(base, batch_size=1024, total_steps=150000, lr=6e-4,
                       warmup=10000, ema_decay=0.99995, eval_every=5000)
    if name == "weighted":
        return replace(base, adaptive_p=0.75, adaptive_c=1e-3)
    raise ConfigError(f"unknown preset {name!r} (expected desk, full-scale, weighted)")
