"""Diagram post-processing, vectorizations and distances.

All vectorizations are sampled on ``n_bins`` evenly spaced points of
``[0, 1]`` (both ends included), which is where cleaned diagrams live once
infinite deaths are replaced by 1.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import CapacityExceeded, EmptyDiagram, GridMismatch
from .persistence import PersistenceDiagram

DEFAULT_ETA = 0.01
DEFAULT_INF_REPLACEMENT = 1.0
DEFAULT_N_BINS = 100
DEFAULT_SIGMA = 0.1
DEFAULT_POWER = 1.0
DEFAULT_K_MAX = 5
EXACT_POINT_LIMIT = 64


@dataclass
class CleanDiagram:
    """A diagram with only finite deaths and no interval shorter than ``eta``."""

    dim: int
    intervals: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        self.intervals = np.asarray(self.intervals, dtype=np.float64).reshape(-1, 2)

    def __len__(self):
        return self.intervals.shape[0]

    def as_pairs(self):
        return sorted(map(tuple, self.intervals.tolist()))


def clean(
    d: Union[PersistenceDiagram, CleanDiagram],
    eta: float = DEFAULT_ETA,
    inf_replacement: float = DEFAULT_INF_REPLACEMENT,
) -> CleanDiagram:
    """Replace infinite deaths, then drop intervals with lifespan strictly below ``eta``.

    The replacement happens first so an essential class born just below the
    replacement value is filtered like any other short interval.
    """
    if eta < 0:
        raise ValueError("eta must be non-negative")
    iv = np.array(d.intervals, dtype=np.float64).reshape(-1, 2)
    iv[np.isinf(iv[:, 1]), 1] = inf_replacement
    keep = (iv[:, 1] - iv[:, 0]) >= eta
    return CleanDiagram(d.dim, iv[keep])


def grid(n_bins: int) -> np.ndarray:
    if n_bins < 2:
        raise ValueError("n_bins must be at least 2")
    return np.linspace(0.0, 1.0, n_bins)


def tent(interval: Tuple[float, float], t):
    """``max(0, min(t - b, d - t))``; ``t`` may be a scalar or an array."""
    b, d = interval
    return np.maximum(0.0, np.minimum(np.subtract(t, b), np.subtract(d, t)))


def _tents(intervals: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Tent values with shape ``(n_intervals, n_samples)``."""
    b = intervals[:, :1]
    d = intervals[:, 1:]
    return np.maximum(0.0, np.minimum(t[None, :] - b, d - t[None, :]))


@dataclass
class SilhouetteCurve:
    grid: np.ndarray
    values: np.ndarray
    power: float


@dataclass
class HeatImage:
    """``values[i, j]`` is sampled at ``(x1, x2) = (grid[i], grid[j])``, i.e. (birth, death)."""

    grid: np.ndarray
    values: np.ndarray
    sigma: float


@dataclass
class LandscapeLayers:
    grid: np.ndarray
    layers: np.ndarray  # shape (k_max, n_bins)


def silhouette(d: CleanDiagram, power: float = DEFAULT_POWER, n_bins: int = DEFAULT_N_BINS) -> SilhouetteCurve:
    """Power-weighted silhouette: tents averaged with weights ``(death - birth) ** power``."""
    if power <= 0:
        raise ValueError("power must be positive")
    t = grid(n_bins)
    iv = d.intervals
    weights = (iv[:, 1] - iv[:, 0]) ** power
    total = weights.sum()
    if len(iv) == 0 or total == 0:
        raise EmptyDiagram(f"silhouette of an empty dimension-{d.dim} diagram")
    values = weights @ _tents(iv, t) / total
    return SilhouetteCurve(t, values, power)


def zero_silhouette(power: float = DEFAULT_POWER, n_bins: int = DEFAULT_N_BINS) -> SilhouetteCurve:
    t = grid(n_bins)
    return SilhouetteCurve(t, np.zeros_like(t), power)


def heat_kernel(sq_dist, t_heat: float):
    return np.exp(-sq_dist / (4.0 * t_heat)) / (4.0 * math.pi * t_heat)


def heat_at(d: CleanDiagram, sigma: float, x1, x2):
    """Heat vectorization evaluated at arbitrary points ``(x1, x2)`` (broadcast together).

    Each diagram point ``p = (b, d)`` contributes a Gaussian at ``p`` minus one at
    its mirror image ``(d, b)``, with heat time ``t = sigma**2 / 2``.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    t_heat = sigma * sigma / 2.0
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=np.float64), np.asarray(x2, dtype=np.float64))
    out = np.zeros(x1.shape)
    for b, dd in d.intervals.tolist():
        # both squared distances are sums of the same two terms on the diagonal,
        # so they cancel exactly there
        u, v = (x1 - b) ** 2, (x2 - dd) ** 2
        r, s = (x1 - dd) ** 2, (x2 - b) ** 2
        out += heat_kernel(u + v, t_heat) - heat_kernel(r + s, t_heat)
    return out


def heat(d: CleanDiagram, sigma: float = DEFAULT_SIGMA, n_bins: int = DEFAULT_N_BINS) -> HeatImage:
    t = grid(n_bins)
    if len(d) == 0:
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        return HeatImage(t, np.zeros((n_bins, n_bins)), sigma)
    # separable evaluation: exp(-(a+b)/4t) = exp(-a/4t) * exp(-b/4t)
    t_heat = sigma * sigma / 2.0
    births = d.intervals[:, 0]
    deaths = d.intervals[:, 1]
    gb = np.exp(-((t[None, :] - births[:, None]) ** 2) / (4.0 * t_heat))
    gd = np.exp(-((t[None, :] - deaths[:, None]) ** 2) / (4.0 * t_heat))
    direct = gb.T @ gd
    values = (direct - direct.T) / (4.0 * math.pi * t_heat)
    return HeatImage(t, values, sigma)


def landscape(d: CleanDiagram, k_max: int = DEFAULT_K_MAX, n_bins: int = DEFAULT_N_BINS) -> LandscapeLayers:
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    t = grid(n_bins)
    layers = np.zeros((k_max, n_bins))
    if len(d):
        tents = -np.sort(-_tents(d.intervals, t), axis=0)
        k = min(k_max, tents.shape[0])
        layers[:k] = tents[:k]
    return LandscapeLayers(t, layers)


def vector_distance(a, b) -> float:
    """Discrete L2 distance ``sqrt(sum((a - b)**2) * cell)``.

    ``cell`` is ``1/n_bins`` for curves and landscape layers, ``1/n_bins**2`` for images.
    """
    if type(a) is not type(b):
        raise GridMismatch(f"cannot compare {type(a).__name__} with {type(b).__name__}")
    if a.grid.shape != b.grid.shape or not np.array_equal(a.grid, b.grid):
        raise GridMismatch("vectorizations sampled on different grids")
    n = a.grid.size
    if isinstance(a, SilhouetteCurve):
        if a.power != b.power:
            raise GridMismatch("silhouettes with different powers")
        diff, cell = a.values - b.values, 1.0 / n
    elif isinstance(a, HeatImage):
        if a.sigma != b.sigma:
            raise GridMismatch("heat images with different sigma")
        diff, cell = a.values - b.values, 1.0 / (n * n)
    elif isinstance(a, LandscapeLayers):
        if a.layers.shape != b.layers.shape:
            raise GridMismatch("landscapes with different layer counts")
        diff, cell = a.layers - b.layers, 1.0 / n
    else:
        raise TypeError(f"unsupported vectorization {type(a).__name__}")
    return float(np.sqrt(np.sum(diff * diff) * cell))


# exact matching distances ---------------------------------------------------

def _points(d) -> np.ndarray:
    return np.asarray(getattr(d, "intervals", d), dtype=np.float64).reshape(-1, 2)


def matching_costs(d1, d2) -> np.ndarray:
    """Square cost matrix of the diagonal-augmented matching problem.

    Rows are the points of ``d1`` followed by one diagonal slot per point of
    ``d2``; columns are the points of ``d2`` followed by one diagonal slot per
    point of ``d1``. Costs are L-infinity distances, ``inf`` where forbidden.
    """
    p, q = _points(d1), _points(d2)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
        raise ValueError("exact distances need finite diagrams; clean them first")
    m, n = len(p), len(q)
    if m + n > EXACT_POINT_LIMIT:
        raise CapacityExceeded(
            f"exact distance on {m + n} points exceeds the limit of {EXACT_POINT_LIMIT}"
        )
    cost = np.full((m + n, n + m), np.inf)
    if m and n:
        cost[:m, :n] = np.max(np.abs(p[:, None, :] - q[None, :, :]), axis=2)
    # distance to the diagonal in the L-infinity norm is half the lifespan
    cost[np.arange(m), n + np.arange(m)] = (p[:, 1] - p[:, 0]) / 2.0
    cost[m + np.arange(n), np.arange(n)] = (q[:, 1] - q[:, 0]) / 2.0
    cost[m:, n:] = 0.0
    return cost


def wasserstein(d1, d2, p: float = 2.0) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    cost = matching_costs(d1, d2)
    if cost.size == 0:
        return 0.0
    powered = cost ** p
    rows, cols = linear_sum_assignment(powered)
    return float(np.sum(powered[rows, cols]) ** (1.0 / p))


def _has_perfect_matching(allowed: np.ndarray) -> bool:
    match = maximum_bipartite_matching(csr_matrix(allowed.astype(np.int8)), perm_type="column")
    return bool(np.all(match >= 0))


def bottleneck(d1, d2) -> float:
    """Smallest threshold admitting a perfect matching, by binary search over candidate costs."""
    cost = matching_costs(d1, d2)
    if cost.size == 0:
        return 0.0
    candidates = np.unique(cost[np.isfinite(cost)])
    lo, hi = 0, candidates.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _has_perfect_matching(cost <= candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])
