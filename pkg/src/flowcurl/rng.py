"""Reproducible random number generation.

The generator is xoshiro256++ with splitmix64 state initialization.
Independent streams come from mixing the stream id into the seed, so any
(seed, stream_id) pair yields a stream that is bit-identical across runs
and platforms.  Hot loops are JIT-compiled with numba; the state lives in
a 4-word uint64 array owned by a single ``Rng`` instance.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True)
def _splitmix64(x):
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = x
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    return x, z ^ (z >> np.uint64(31))


@njit(cache=True)
def _init_state(seed, stream_id):
    state = np.empty(4, dtype=np.uint64)
    x = np.uint64(seed) ^ np.uint64(stream_id)
    for i in range(4):
        x, out = _splitmix64(x)
        state[i] = out
    return state


@njit(cache=True, inline="always")
def _rotl(x, k):
    return ((x << np.uint64(k)) | (x >> np.uint64(64 - k))) & np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True, inline="always")
def _next_u64(s):
    result = (_rotl((s[0] + s[3]) & np.uint64(0xFFFFFFFFFFFFFFFF), 23) + s[0]) & np.uint64(
        0xFFFFFFFFFFFFFFFF
    )
    t = (s[1] << np.uint64(17)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True)
def _fill_u64(s, out):
    for i in range(out.shape[0]):
        out[i] = _next_u64(s)


@njit(cache=True, inline="always")
def _next_double(s):
    # 53-bit mantissa draw in [0, 1)
    return (_next_u64(s) >> np.uint64(11)) * _INV_2_53


@njit(cache=True)
def _fill_uniform(s, out):
    for i in range(out.shape[0]):
        out[i] = _next_double(s)


@njit(cache=True)
def _fill_normal(s, out):
    # Box-Muller; u1 shifted into (0, 1] so the log is finite.
    n = out.shape[0]
    i = 0
    while i + 1 < n:
        u1 = 1.0 - _next_double(s)
        u2 = _next_double(s)
        r = np.sqrt(-2.0 * np.log(u1))
        out[i] = r * np.cos(2.0 * np.pi * u2)
        out[i + 1] = r * np.sin(2.0 * np.pi * u2)
        i += 2
    if i < n:
        u1 = 1.0 - _next_double(s)
        u2 = _next_double(s)
        out[i] = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@njit(cache=True, inline="always")
def _gamma_ge1(s, alpha):
    # Marsaglia-Tsang squeeze for shape >= 1.
    d = alpha - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    while True:
        x = 0.0
        v = 0.0
        while True:
            u1 = 1.0 - _next_double(s)
            u2 = _next_double(s)
            x = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
            v = 1.0 + c * x
            if v > 0.0:
                break
        v = v * v * v
        u = _next_double(s)
        if u < 1.0 - 0.0331 * x * x * x * x:
            return d * v
        if u > 0.0 and np.log(u) < 0.5 * x * x + d * (1.0 - v + np.log(v)):
            return d * v


@njit(cache=True)
def _fill_gamma(s, alpha, out):
    # Shapes below one get the u**(1/alpha) boost on a shape+1 draw.
    boost = alpha < 1.0
    a = alpha + 1.0 if boost else alpha
    for i in range(out.shape[0]):
        g = _gamma_ge1(s, a)
        if boost:
            u = 1.0 - _next_double(s)
            g *= u ** (1.0 / alpha)
        out[i] = g


@njit(cache=True)
def _fill_beta(s, a, b, out):
    boost_a = a < 1.0
    boost_b = b < 1.0
    aa = a + 1.0 if boost_a else a
    bb = b + 1.0 if boost_b else b
    for i in range(out.shape[0]):
        ga = _gamma_ge1(s, aa)
        if boost_a:
            u = 1.0 - _next_double(s)
            ga *= u ** (1.0 / a)
        gb = _gamma_ge1(s, bb)
        if boost_b:
            u = 1.0 - _next_double(s)
            gb *= u ** (1.0 / b)
        out[i] = ga / (ga + gb)


class Rng:
    """xoshiro256++ stream addressed by (seed, stream_id).

    Single-owner mutable state: never share one instance across workers.
    Distinct stream ids give streams whose states are splitmix64-mixed,
    i.e. effectively random points on the 2**256-1 cycle, so overlap
    within any realistic draw budget is impossible.
    """

    __slots__ = ("seed", "stream_id", "_state")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._state = _init_state(self.seed & 0xFFFFFFFFFFFFFFFF, self.stream_id & 0xFFFFFFFFFFFFFFFF)

    def spawn(self, stream_id: int) -> "Rng":
        """Fresh independent stream derived from this generator's seed."""
        return Rng(self.seed, stream_id)

    def next_u64(self) -> int:
        out = np.empty(1, dtype=np.uint64)
        _fill_u64(self._state, out)
        return int(out[0])

    def uniform(self, n: int | None = None):
        """Draws in [0, 1); scalar when n is None."""
        out = np.empty(n if n is not None else 1, dtype=np.float64)
        _fill_uniform(self._state, out)
        return out if n is not None else float(out[0])

    def normal(self, n: int | None = None):
        """Standard normal draws via Box-Muller."""
        out = np.empty(n if n is not None else 1, dtype=np.float64)
        _fill_normal(self._state, out)
        return out if n is not None else float(out[0])

    def gamma(self, shape: float, n: int | None = None):
        """Gamma(shape, 1) via the Marsaglia-Tsang squeeze method."""
        if shape <= 0.0:
            raise ValueError(f"gamma shape must be positive, got {shape}")
        out = np.empty(n if n is not None else 1, dtype=np.float64)
        _fill_gamma(self._state, float(shape), out)
        return out if n is not None else float(out[0])

    def beta(self, a: float, b: float, n: int | None = None):
        """Beta(a, b) from two Marsaglia-Tsang gamma draws."""
        if a <= 0.0 or b <= 0.0:
            raise ValueError(f"beta parameters must be positive, got a={a}, b={b}")
        out = np.empty(n if n is not None else 1, dtype=np.float64)
        _fill_beta(self._state, float(a), float(b), out)
        return out if n is not None else float(out[0])

    def integers(self, high: int, n: int | None = None):
        """Uniform integers in [0, high). Bias is O(high / 2**53): negligible
        for the index ranges used here."""
        u = self.uniform(n if n is not None else 1)
        idx = np.minimum((u * high).astype(np.int64), high - 1)
        return idx if n is not None else int(idx[0])

    @property
    def state(self) -> tuple[int, int, int, int]:
        return tuple(int(w) for w in self._state)
