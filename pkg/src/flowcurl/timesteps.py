"""Timestep distributions p(t) on [0, 1] used to drive training.

Four variants: Uniform, Mode (symmetric Beta, p(t) ~ t^s (1-t)^s with
s > -1), LogitNormal (sigmoid of a Gaussian), and a two-phase Curriculum
that switches from one distribution to another at a fixed training step.

Every distribution exposes exact sampling (sample_t), a normalized
density (pdf) and a cumulative distribution (cdf).  Sampling never clamps:
the flow-matching objective with the linear path is finite at t in {0, 1},
so endpoint draws are legal training inputs.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError, DomainError, ParameterError
from .numerics import adaptive_simpson, normal_cdf, regularized_incomplete_beta
from .rng import Rng


@dataclass(frozen=True)
class Uniform:
    """t ~ U(0, 1)."""


@dataclass(frozen=True)
class Mode:
    """Symmetric Beta family: p(t) proportional to t^s (1-t)^s, s > -1.

    s = -0.5 is the Arcsine (bathtub) distribution, s = 0 is Uniform,
    s > 0 is middle-biased.
    """

    s: float

    def __post_init__(self):
        if not self.s > -1.0:
            raise ParameterError(f"Mode requires s > -1, got s={self.s}")


@dataclass(frozen=True)
class LogitNormal:
    """t = sigmoid(u) with u ~ N(mu, sigma^2)."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ParameterError(f"LogitNormal requires sigma > 0, got sigma={self.sigma}")


@dataclass(frozen=True)
class Curriculum:
    """Two-phase schedule: phase1 while step < switch_step, phase2 after."""

    phase1: "TimestepDistribution"
    phase2: "TimestepDistribution"
    switch_step: int

    def __post_init__(self):
        if isinstance(self.phase1, Curriculum) or isinstance(self.phase2, Curriculum):
            raise ParameterError("Curriculum phases must not be Curriculum themselves")
        if self.switch_step < 0:
            raise ParameterError(f"switch_step must be >= 0, got {self.switch_step}")

    def active(self, step: int) -> "TimestepDistribution":
        return self.phase1 if step < self.switch_step else self.phase2


TimestepDistribution = Union[Uniform, Mode, LogitNormal, Curriculum]

UNIFORM = Uniform()


def _logit(t: float) -> float:
    return math.log(t / (1.0 - t))


def sample_t_batch(dist: TimestepDistribution, rng: Rng, step: int, n: int) -> np.ndarray:
    """n independent draws from p(t) at the given training step."""
    if isinstance(dist, Curriculum):
        return sample_t_batch(dist.active(step), rng, step, n)
    if isinstance(dist, Uniform):
        return rng.uniform(n)
    if isinstance(dist, Mode):
        # Beta(s+1, s+1) via two Marsaglia-Tsang gamma draws.
        a = dist.s + 1.0
        return rng.beta(a, a, n)
    if isinstance(dist, LogitNormal):
        u = dist.mu + dist.sigma * rng.normal(n)
        return 1.0 / (1.0 + np.exp(-u))
    raise TypeError(f"unknown distribution {dist!r}")


def sample_t(dist: TimestepDistribution, rng: Rng, step: int) -> float:
    """One draw from p(t) at the given training step."""
    return float(sample_t_batch(dist, rng, step, 1)[0])


def pdf(dist: TimestepDistribution, t: float, step: int = 0) -> float:
    """Normalized density at t.

    Endpoint conventions: LogitNormal returns its limit value 0 at
    t in {0, 1}; Mode with s < 0 returns +inf there (an explicit sentinel
    the caller must reject, the density is unbounded).
    """
    if t < 0.0 or t > 1.0:
        raise DomainError(f"t must be in [0, 1], got {t}")
    if isinstance(dist, Curriculum):
        return pdf(dist.active(step), t, step)
    if isinstance(dist, Uniform):
        return 1.0
    if isinstance(dist, Mode):
        s = dist.s
        if t == 0.0 or t == 1.0:
            if s < 0.0:
                return math.inf
            return 0.0 if s > 0.0 else 1.0
        log_norm = math.lgamma(2.0 * s + 2.0) - 2.0 * math.lgamma(s + 1.0)
        return math.exp(s * (math.log(t) + math.log1p(-t)) + log_norm)
    if isinstance(dist, LogitNormal):
        if t == 0.0 or t == 1.0:
            return 0.0
        z = (_logit(t) - dist.mu) / dist.sigma
        return math.exp(-0.5 * z * z) / (dist.sigma * t * (1.0 - t) * math.sqrt(2.0 * math.pi))
    raise TypeError(f"unknown distribution {dist!r}")


def cdf(dist: TimestepDistribution, t: float, step: int = 0) -> float:
    """P(T <= t) at the given training step."""
    if t < 0.0 or t > 1.0:
        raise DomainError(f"t must be in [0, 1], got {t}")
    if isinstance(dist, Curriculum):
        return cdf(dist.active(step), t, step)
    if isinstance(dist, Uniform):
        return t
    if isinstance(dist, Mode):
        a = dist.s + 1.0
        return regularized_incomplete_beta(a, a, t)
    if isinstance(dist, LogitNormal):
        if t == 0.0:
            return 0.0
        if t == 1.0:
            return 1.0
        return normal_cdf((_logit(t) - dist.mu) / dist.sigma)
    raise TypeError(f"unknown distribution {dist!r}")


def _log_sigmoid(w: float) -> float:
    if w >= 0.0:
        return -math.log1p(math.exp(-w))
    return w - math.log1p(math.exp(w))


def pdf_mass(
    dist: TimestepDistribution,
    lo: float = 0.0,
    hi: float = 1.0,
    step: int = 0,
    tol: float = 1e-9,
) -> float:
    """Integral of pdf over [lo, hi] by adaptive Simpson quadrature.

    The integration runs in logit space (t = sigmoid(w)) with the
    transformed integrand pdf(t) * t * (1-t) written in log form, so it
    stays finite even where sigmoid(w) rounds to 0 or 1 and for the
    boundary-heavy Mode densities with s < 0.
    """
    if lo < 0.0 or hi > 1.0 or lo > hi:
        raise DomainError(f"integration bounds must satisfy 0 <= lo <= hi <= 1, got [{lo}, {hi}]")
    if isinstance(dist, Curriculum):
        return pdf_mass(dist.active(step), lo, hi, step, tol)

    if isinstance(dist, Uniform):
        def integrand(w: float) -> float:
            return math.exp(_log_sigmoid(w) + _log_sigmoid(-w))
        w_cap = 40.0
    elif isinstance(dist, Mode):
        s = dist.s
        log_norm = math.lgamma(2.0 * s + 2.0) - 2.0 * math.lgamma(s + 1.0)

        def integrand(w: float) -> float:
            return math.exp((s + 1.0) * (_log_sigmoid(w) + _log_sigmoid(-w)) + log_norm)
        # transformed tail decays like exp(-(s+1)|w|) around the norm constant
        w_cap = (30.0 + abs(log_norm)) / (s + 1.0) + 10.0
    elif isinstance(dist, LogitNormal):
        mu, sigma = dist.mu, dist.sigma
        scale = 1.0 / (sigma * math.sqrt(2.0 * math.pi))

        def integrand(w: float) -> float:
            z = (w - mu) / sigma
            return scale * math.exp(-0.5 * z * z)
        w_cap = abs(mu) + 12.0 * sigma
    else:
        raise TypeError(f"unknown distribution {dist!r}")

    if hi == lo:
        return 0.0
    w_lo = _logit(lo) if lo > 0.0 else -w_cap
    w_hi = _logit(hi) if hi < 1.0 else w_cap
    if w_hi <= w_lo:
        return 0.0
    return adaptive_simpson(integrand, w_lo, w_hi, tol=tol)


# --- textual descriptors ---------------------------------------------------

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_MODE_RE = re.compile(rf"^mode\(\s*s\s*=\s*({_NUM})\s*\)$")
_LN_RE = re.compile(rf"^logitnormal\(\s*mu\s*=\s*({_NUM})\s*,\s*sigma\s*=\s*({_NUM})\s*\)$")
_CURR_RE = re.compile(r"^curriculum\((.*)\)$", re.DOTALL)


def render_distribution(dist: TimestepDistribution) -> str:
    """Canonical one-line descriptor; parse_distribution inverts it."""
    if isinstance(dist, Uniform):
        return "uniform"
    if isinstance(dist, Mode):
        return f"mode(s={dist.s!r})"
    if isinstance(dist, LogitNormal):
        return f"logitnormal(mu={dist.mu!r},sigma={dist.sigma!r})"
    if isinstance(dist, Curriculum):
        p1 = render_distribution(dist.phase1)
        p2 = render_distribution(dist.phase2)
        return f"curriculum(p1={p1};p2={p2};ts={dist.switch_step})"
    raise TypeError(f"unknown distribution {dist!r}")


def _split_top_level(body: str, sep: str) -> list[str]:
    parts = []
    depth = 0
    current = []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ConfigError(f"unbalanced parentheses in descriptor body {body!r}")
        if ch == sep and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    if depth != 0:
        raise ConfigError(f"unbalanced parentheses in descriptor body {body!r}")
    parts.append("".join(current))
    return parts


def parse_distribution(text: str) -> TimestepDistribution:
    """Parse a schedule descriptor.

    Grammar: ``uniform`` | ``mode(s=<f>)`` | ``logitnormal(mu=<f>,sigma=<f>)``
    | ``curriculum(p1=<desc>;p2=<desc>;ts=<int>)``.
    """
    s = text.strip()
    if s == "uniform":
        return UNIFORM
    m = _MODE_RE.match(s)
    if m:
        return Mode(s=float(m.group(1)))
    m = _LN_RE.match(s)
    if m:
        return LogitNormal(mu=float(m.group(1)), sigma=float(m.group(2)))
    m = _CURR_RE.match(s)
    if m:
        fields: dict[str, str] = {}
        for part in _split_top_level(m.group(1), ";"):
            key, eq, value = part.partition("=")
            if not eq:
                raise ConfigError(f"malformed curriculum field {part!r} in {text!r}")
            fields[key.strip()] = value.strip()
        if set(fields) != {"p1", "p2", "ts"}:
            raise ConfigError(
                f"curriculum needs exactly p1, p2, ts fields, got {sorted(fields)} in {text!r}"
            )
        try:
            switch = int(fields["ts"])
        except ValueError as e:
            raise ConfigError(f"curriculum ts must be an integer, got {fields['ts']!r}") from e
        return Curriculum(
            phase1=parse_distribution(fields["p1"]),
            phase2=parse_distribution(fields["p2"]),
            switch_step=switch,
        )
    raise ConfigError(f"unrecognized distribution descriptor {text!r}")
