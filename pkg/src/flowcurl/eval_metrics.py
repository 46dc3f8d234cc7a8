"""Two-sample distances for judging generated samples, plus the U-shape
summary of the time-resolved training loss.

All three distances are V-statistics (self-pairs included), computed in
float64 with row-chunked pairwise kernels so memory stays bounded on
samples of a few thousand points.
"""

from __future__ import annotations

import numpy as np

from .errors import InsufficientDataError, ParameterError, ShapeError
from .rng import Rng

_CHUNK = 2048


def _as_2d(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ShapeError(f"{name} must be an (n >= 2, d) array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ShapeError(f"{name} contains non-finite entries")
    return x


def _check_pair(x: np.ndarray, y: np.ndarray):
    if x.shape[1] != y.shape[1]:
        raise ShapeError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")


def sliced_w2(x, y, rng: Rng, n_proj: int = 128) -> float:
    """Sliced 2-Wasserstein distance between samples x and y.

    Projects both clouds onto n_proj random unit directions and averages
    the squared 1-D W2 distances, returning the square root.  Equal-size
    samples pair sorted projections exactly; unequal sizes compare
    quantile functions on a common midpoint grid.
    """
    x = _as_2d(x, "x")
    y = _as_2d(y, "y")
    _check_pair(x, y)
    if n_proj < 1:
        raise ParameterError(f"n_proj must be >= 1, got {n_proj}")
    d = x.shape[1]
    dirs = rng.normal(n_proj * d).reshape(n_proj, d)
    dirs /= np.sqrt(np.sum(dirs * dirs, axis=1))[:, None]

    px = x @ dirs.T   # (n_x, n_proj)
    py = y @ dirs.T
    px.sort(axis=0)
    py.sort(axis=0)
    if x.shape[0] == y.shape[0]:
        diff = px - py
        return float(np.sqrt(np.mean(diff * diff)))
    m = max(x.shape[0], y.shape[0])
    qs = (np.arange(m) + 0.5) / m
    total = 0.0
    for j in range(n_proj):
        qx = np.quantile(px[:, j], qs, method="linear")
        qy = np.quantile(py[:, j], qs, method="linear")
        total += float(np.mean((qx - qy) ** 2))
    return float(np.sqrt(total / n_proj))


def _pairwise_sq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # (n_a, n_b) squared distances, clipped against negative round-off
    sq = (np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :]
          - 2.0 * (a @ b.T))
    np.maximum(sq, 0.0, out=sq)
    return sq


def _mean_pairwise_dist(a: np.ndarray, b: np.ndarray) -> float:
    # direct coordinate differences: the dot-product expansion leaves
    # round-off that the square root blows up to ~1e-8 on duplicate pairs
    rows = max(1, _CHUNK * _CHUNK // (b.shape[0] * max(b.shape[1], 1)))
    total = 0.0
    for i in range(0, a.shape[0], rows):
        blk = a[i:i + rows]
        sq = np.sum((blk[:, None, :] - b[None, :, :]) ** 2, axis=-1)
        total += float(np.sum(np.sqrt(sq)))
    return total / (a.shape[0] * b.shape[0])


def energy_distance(x, y) -> float:
    """Energy distance 2 E||X-Y|| - E||X-X'|| - E||Y-Y'|| (V-statistic)."""
    x = _as_2d(x, "x")
    y = _as_2d(y, "y")
    _check_pair(x, y)
    return (2.0 * _mean_pairwise_dist(x, y)
            - _mean_pairwise_dist(x, x)
            - _mean_pairwise_dist(y, y))


def median_heuristic_bandwidth(x, y, cap: int = 2048) -> float:
    """Median pairwise distance of the pooled sample (even-stride subset)."""
    x = _as_2d(x, "x")
    y = _as_2d(y, "y")
    _check_pair(x, y)
    pooled = np.concatenate([x, y], axis=0)
    if pooled.shape[0] > cap:
        idx = np.linspace(0, pooled.shape[0] - 1, cap).astype(np.int64)
        pooled = pooled[idx]
    dist = np.sqrt(_pairwise_sq(pooled, pooled))
    iu = np.triu_indices(pooled.shape[0], k=1)
    med = float(np.median(dist[iu]))
    if med <= 0.0:
        raise InsufficientDataError("median pairwise distance is zero; samples degenerate")
    return med


def mmd_rbf(x, y, bandwidth: float = None) -> float:
    """Squared MMD with an RBF kernel, biased V-statistic.

    kernel k(a, b) = exp(-||a - b||^2 / (2 sigma^2)); sigma defaults to the
    median heuristic on the pooled sample.
    """
    x = _as_2d(x, "x")
    y = _as_2d(y, "y")
    _check_pair(x, y)
    if bandwidth is None:
        bandwidth = median_heuristic_bandwidth(x, y)
    if bandwidth <= 0.0:
        raise ParameterError(f"bandwidth must be > 0, got {bandwidth}")
    gamma = 1.0 / (2.0 * bandwidth * bandwidth)

    def mean_kernel(a, b):
        total = 0.0
        for i in range(0, a.shape[0], _CHUNK):
            blk = a[i:i + _CHUNK]
            total += float(np.sum(np.exp(-gamma * _pairwise_sq(blk, b))))
        return total / (a.shape[0] * b.shape[0])

    val = mean_kernel(x, x) + mean_kernel(y, y) - 2.0 * mean_kernel(x, y)
    return max(val, 0.0)


def u_shape_ratio(t, loss) -> float:
    """Boundary-to-middle loss ratio.

    mean loss over t in [0, 0.1] union [0.9, 1] divided by mean loss over
    t in [0.4, 0.6] (window edges inclusive).  Values well above 1
    indicate the U-shaped loss profile.
    """
    t = np.asarray(t, dtype=np.float64)
    loss = np.asarray(loss, dtype=np.float64)
    if t.shape != loss.shape or t.ndim != 1:
        raise ShapeError(f"t and loss must be matching 1-D arrays, got {t.shape}, {loss.shape}")
    if t.size < 11:
        raise InsufficientDataError(f"profile needs >= 11 grid points, got {t.size}")
    edge = (t <= 0.1) | (t >= 0.9)
    mid = (t >= 0.4) & (t <= 0.6)
    if not np.any(edge):
        raise InsufficientDataError("no loss values with t in [0, 0.1] or [0.9, 1]")
    if not np.any(mid):
        raise InsufficientDataError("no loss values with t in [0.4, 0.6]")
    denom = float(np.mean(loss[mid]))
    if denom <= 0.0:
        raise InsufficientDataError(f"mid-window mean loss must be > 0, got {denom}")
    return float(np.mean(loss[edge])) / denom
