"""Synthetic 2-D target distributions.

Every variant except SinglePoint is standardized analytically to zero
mean and unit per-coordinate variance using exact moments of the raw
construction, so the standardization never depends on the drawn sample.

Descriptor grammar (parse_dataset / render_dataset):

    gmm(k=<int>,radius=<f>,sigma=<f>)
    moons(noise=<f>)
    checkerboard(cells=<int>)
    point(x0=<f>,<f>,...)
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .errors import ConfigError, ParameterError
from .rng import Rng


@dataclass(frozen=True)
class GaussianMixture:
    """k isotropic Gaussians with means on a circle, at angles 2 pi j / k."""

    k: int = 8
    radius: float = 4.0
    sigma: float = 0.3

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")
        if self.radius <= 0.0:
            raise ParameterError(f"radius must be > 0, got {self.radius}")
        if self.sigma <= 0.0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class TwoMoons:
    """Interleaved half-circles with isotropic Gaussian jitter."""

    noise: float = 0.05

    def __post_init__(self):
        if self.noise < 0.0:
            raise ParameterError(f"noise must be >= 0, got {self.noise}")


@dataclass(frozen=True)
class Checkerboard:
    """Uniform over the black cells of a cells x cells board.

    cells must be even so both marginals stay uniform (which keeps the
    analytic standardization exact).
    """

    cells: int = 4

    def __post_init__(self):
        if self.cells < 2 or self.cells % 2 != 0:
            raise ParameterError(f"cells must be an even integer >= 2, got {self.cells}")


@dataclass(frozen=True)
class SinglePoint:
    """Degenerate dataset, every row equals x0; oracle use only."""

    x0: Tuple[float, ...] = (0.0, 0.0)

    def __post_init__(self):
        if len(self.x0) < 1:
            raise ParameterError("x0 must have at least one coordinate")
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))


DatasetVariant = Union[GaussianMixture, TwoMoons, Checkerboard, SinglePoint]


@dataclass(frozen=True)
class DatasetSpec:
    variant: DatasetVariant
    n_cache: int = 65536

    def __post_init__(self):
        if self.n_cache < 1:
            raise ParameterError(f"n_cache must be >= 1, got {self.n_cache}")

    @property
    def dim(self) -> int:
        if isinstance(self.variant, SinglePoint):
            return len(self.variant.x0)
        return 2


def _moments(variant: DatasetVariant):
    """Exact (mean, per-coordinate std) of the raw construction."""
    if isinstance(variant, GaussianMixture):
        ang = 2.0 * math.pi * np.arange(variant.k) / variant.k
        means = variant.radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        mu = means.mean(axis=0)
        var = variant.sigma ** 2 + np.mean(means * means, axis=0) - mu * mu
        return mu, np.sqrt(var)
    if isinstance(variant, TwoMoons):
        # Half-circle moments: E cos = 0, E sin = 2/pi, E cos^2 = E sin^2 = 1/2.
        s2 = variant.noise ** 2
        mu = np.array([0.5, 0.25])
        var = np.array([0.75 + s2, 0.5625 - 1.0 / math.pi + s2])
        return mu, np.sqrt(var)
    if isinstance(variant, Checkerboard):
        c = variant.cells
        # With an even board both marginals are uniform on [0, c].
        mu = np.array([c / 2.0, c / 2.0])
        var = np.array([c * c / 12.0, c * c / 12.0])
        return mu, np.sqrt(var)
    raise TypeError(f"no analytic moments for {variant!r}")


def _sample_raw(variant: DatasetVariant, rng: Rng, n: int) -> np.ndarray:
    if isinstance(variant, GaussianMixture):
        comp = rng.integers(variant.k, n)
        ang = 2.0 * math.pi * comp / variant.k
        means = variant.radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        return means + variant.sigma * rng.normal(2 * n).reshape(n, 2)
    if isinstance(variant, TwoMoons):
        which = rng.integers(2, n)
        phi = math.pi * rng.uniform(n)
        x = np.where(which == 0, np.cos(phi), 1.0 - np.cos(phi))
        y = np.where(which == 0, np.sin(phi), 0.5 - np.sin(phi))
        out = np.stack([x, y], axis=1)
        if variant.noise > 0.0:
            out += variant.noise * rng.normal(2 * n).reshape(n, 2)
        return out
    if isinstance(variant, Checkerboard):
        c = variant.cells
        # Enumerate black cells (i + j even) and pick uniformly among them.
        ii, jj = np.meshgrid(np.arange(c), np.arange(c), indexing="ij")
        keep = (ii + jj) % 2 == 0
        corners = np.stack([ii[keep], jj[keep]], axis=1).astype(np.float64)
        pick = rng.integers(corners.shape[0], n)
        offs = rng.uniform(2 * n).reshape(n, 2)
        return corners[pick] + offs
    if isinstance(variant, SinglePoint):
        return np.tile(np.asarray(variant.x0, dtype=np.float64), (n, 1))
    raise TypeError(f"unknown dataset variant {variant!r}")


def generate_dataset(spec: DatasetSpec, rng: Rng, n: int = None) -> np.ndarray:
    """n standardized samples (defaults to spec.n_cache rows)."""
    if n is None:
        n = spec.n_cache
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    raw = _sample_raw(spec.variant, rng, n)
    if isinstance(spec.variant, SinglePoint):
        return raw
    mu, std = _moments(spec.variant)
    return (raw - mu) / std


class Dataset:
    """Sampling handle bound to a spec; rows standardized on the fly."""

    def __init__(self, spec: DatasetSpec):
        self.spec = spec
        if isinstance(spec.variant, SinglePoint):
            self._mu, self._std = None, None
        else:
            self._mu, self._std = _moments(spec.variant)

    @property
    def dim(self) -> int:
        return self.spec.dim

    def sample(self, rng: Rng, n: int) -> np.ndarray:
        raw = _sample_raw(self.spec.variant, rng, n)
        if self._mu is None:
            return raw
        return (raw - self._mu) / self._std


# --- textual descriptors ---------------------------------------------------

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_GMM_RE = re.compile(
    rf"^gmm\(\s*k\s*=\s*(\d+)\s*,\s*radius\s*=\s*({_NUM})\s*,\s*sigma\s*=\s*({_NUM})\s*\)$")
_MOONS_RE = re.compile(rf"^moons\(\s*noise\s*=\s*({_NUM})\s*\)$")
_CHECKER_RE = re.compile(r"^checkerboard\(\s*cells\s*=\s*(\d+)\s*\)$")
_POINT_RE = re.compile(r"^point\(\s*x0\s*=\s*(.*)\)$")


def render_dataset(variant: DatasetVariant) -> str:
    if isinstance(variant, GaussianMixture):
        return f"gmm(k={variant.k},radius={variant.radius!r},sigma={variant.sigma!r})"
    if isinstance(variant, TwoMoons):
        return f"moons(noise={variant.noise!r})"
    if isinstance(variant, Checkerboard):
        return f"checkerboard(cells={variant.cells})"
    if isinstance(variant, SinglePoint):
        coords = ",".join(repr(v) for v in variant.x0)
        return f"point(x0={coords})"
    raise TypeError(f"unknown dataset variant {variant!r}")


def parse_dataset(text: str) -> DatasetVariant:
    s = text.strip()
    m = _GMM_RE.match(s)
    if m:
        return GaussianMixture(k=int(m.group(1)), radius=float(m.group(2)),
                               sigma=float(m.group(3)))
    m = _MOONS_RE.match(s)
    if m:
        return TwoMoons(noise=float(m.group(1)))
    m = _CHECKER_RE.match(s)
    if m:
        return Checkerboard(cells=int(m.group(1)))
    m = _POINT_RE.match(s)
    if m:
        try:
            coords = tuple(float(v) for v in m.group(1).split(","))
        except ValueError as e:
            raise ConfigError(f"bad point coordinates in {text!r}") from e
        return SinglePoint(x0=coords)
    raise ConfigError(f"unrecognized dataset descriptor {text!r}")
