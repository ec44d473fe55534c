"""Homological convergence of a training run.

For every snapshot: graph -> flag complex -> persistence diagrams -> cleaned
diagrams -> vectorization. Consecutive snapshots are compared, the distances
accumulated, and the cumulative curve is correlated with validation accuracy
after resampling both onto the same number of evenly spaced points.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, Optional, Sequence

import numpy as np

from . import diagrams as dg
from .errors import DegenerateDomain, InsufficientSnapshots, UndefinedCorrelation
from .flag_complex import build_flag_complex, default_cell_budget
from .graph import DEFAULT_ZETA, NormalizationParams, build_graph
from .persistence import compute_persistence
from .snapshot_io import MetricSeries, NetworkState, list_snapshots, read_snapshot, step_from_path

log = logging.getLogger(__name__)

DISTANCE_KINDS = ("heat", "silhouette", "bottleneck", "wasserstein")


@dataclass(frozen=True)
class PipelineConfig:
    distance_kind: str = "heat"
    max_dim: int = 3
    eta: float = dg.DEFAULT_ETA
    inf_replacement: float = dg.DEFAULT_INF_REPLACEMENT
    n_bins: int = dg.DEFAULT_N_BINS
    sigma: float = dg.DEFAULT_SIGMA
    power: float = dg.DEFAULT_POWER
    wasserstein_p: float = 2.0
    correlation_points: int = 20
    zeta: float = DEFAULT_ZETA
    cell_budget: int = field(default_factory=default_cell_budget)

    def __post_init__(self):
        if self.distance_kind not in DISTANCE_KINDS:
            raise ValueError(f"distance_kind must be one of {DISTANCE_KINDS}")
        if self.max_dim < 0:
            raise ValueError("max_dim must be non-negative")
        if self.correlation_points < 2:
            raise ValueError("correlation_points must be at least 2")
        if self.n_bins < 2:
            raise ValueError("n_bins must be at least 2")
        if self.sigma <= 0 or self.power <= 0 or self.wasserstein_p < 1 or self.eta < 0:
            raise ValueError("sigma and power must be positive, wasserstein_p >= 1, eta >= 0")
        if self.cell_budget < 1:
            raise ValueError("cell_budget must be positive")
        NormalizationParams(self.zeta)


def snapshot_diagrams(state: NetworkState, cfg: PipelineConfig) -> List[dg.CleanDiagram]:
    g = build_graph(state, NormalizationParams(cfg.zeta))
    cx = build_flag_complex(g, top_dim=cfg.max_dim + 1, cell_budget=cfg.cell_budget)
    raw = compute_persistence(cx, cfg.max_dim, cell_budget=cfg.cell_budget)
    return [dg.clean(d, cfg.eta, cfg.inf_replacement) for d in raw]


def vectorize(d: dg.CleanDiagram, cfg: PipelineConfig):
    """Vectorization used by the vector distance kinds.

    An empty dimension becomes the zero curve for silhouettes (the weighted
    mean is undefined there); the heat image of an empty diagram is already zero.
    """
    if cfg.distance_kind == "heat":
        return dg.heat(d, cfg.sigma, cfg.n_bins)
    if cfg.distance_kind == "silhouette":
        if len(d) == 0:
            return dg.zero_silhouette(cfg.power, cfg.n_bins)
        return dg.silhouette(d, cfg.power, cfg.n_bins)
    raise ValueError(f"{cfg.distance_kind} is not a vectorized distance")


def snapshot_features(state: NetworkState, cfg: PipelineConfig) -> list:
    """Per-dimension objects compared between consecutive snapshots."""
    cleaned = snapshot_diagrams(state, cfg)
    if cfg.distance_kind in ("bottleneck", "wasserstein"):
        return cleaned
    return [vectorize(d, cfg) for d in cleaned]


def feature_distance(a: list, b: list, cfg: PipelineConfig) -> float:
    """Per-dimension distances summed over dimensions ``0..max_dim``."""
    total = 0.0
    for fa, fb in zip(a, b):
        if cfg.distance_kind == "bottleneck":
            total += dg.bottleneck(fa, fb)
        elif cfg.distance_kind == "wasserstein":
            total += dg.wasserstein(fa, fb, cfg.wasserstein_p)
        else:
            total += dg.vector_distance(fa, fb)
    return total


def snapshot_distance(s1: NetworkState, s2: NetworkState, cfg: PipelineConfig) -> float:
    return feature_distance(snapshot_features(s1, cfg), snapshot_features(s2, cfg), cfg)


def resample_to(x: Sequence[float], y: Sequence[float], n_points: int) -> np.ndarray:
    """Linear interpolation of ``y`` at ``n_points`` even positions spanning ``[min x, max x]``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D and of equal length")
    if x.size < 2 or x[0] == x[-1]:
        raise DegenerateDomain("need at least two distinct x values")
    if np.any(np.diff(x) <= 0):
        raise ValueError("x must be strictly increasing")
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    return np.interp(np.linspace(x[0], x[-1], n_points), x, y)


def pearson(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("pearson needs two 1-D series of equal length >= 2")
    da = a - a.mean()
    db = b - b.mean()
    sa = np.sqrt(np.dot(da, da))
    sb = np.sqrt(np.dot(db, db))
    if sa == 0 or sb == 0:
        raise UndefinedCorrelation("correlation with a constant series is undefined")
    r = np.dot(da, db) / (sa * sb)
    return float(np.clip(r, -1.0, 1.0))


def minmax_normalize(series: Sequence[float]) -> np.ndarray:
    s = np.asarray(series, dtype=np.float64)
    if s.size == 0:
        raise ValueError("empty series")
    lo, hi = s.min(), s.max()
    if hi == lo:
        return np.zeros_like(s)
    return (s - lo) / (hi - lo)


@dataclass
class ConvergenceReport:
    steps: List[int]
    distances: List[float]
    cumulative: List[float]
    resampled_distance: List[float]
    resampled_accuracy: List[float]
    pearson_r: float
    distance_kind: str = "heat"

    @property
    def n_points(self) -> int:
        return len(self.resampled_distance)

    def report_rows(self):
        # row i is the pair (steps[i], steps[i + 1]), labelled by the later step
        for step, d, c in zip(self.steps[1:], self.distances, self.cumulative):
            yield step, d, c

    def normalized_curves(self):
        progress = np.linspace(0.0, 1.0, self.n_points)
        cum = minmax_normalize(self.resampled_distance)
        acc = minmax_normalize(self.resampled_accuracy)
        return list(zip(progress.tolist(), cum.tolist(), acc.tolist()))


def _features_from_path(args):
    path, cfg = args
    return snapshot_features(read_snapshot(path), cfg)


def _features_from_state(args):
    state, cfg = args
    return snapshot_features(state, cfg)


def _feature_stream(items: list, fn, cfg: PipelineConfig, jobs: Optional[int]) -> Iterator[list]:
    if jobs is None:
        jobs = os.cpu_count() or 1
    work = [(item, cfg) for item in items]
    if jobs <= 1 or len(work) < 2:
        yield from map(fn, work)
        return
    # executor.map preserves input order, so the reduction below is deterministic
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(fn, work, chunksize=max(1, len(work) // (4 * jobs)))


def _assemble(steps: List[int], features: Iterable[list], metrics: MetricSeries, cfg: PipelineConfig) -> ConvergenceReport:
    distances = []
    prev = None
    for feat in features:
        if prev is not None:
            distances.append(feature_distance(prev, feat, cfg))
        prev = feat
    cumulative = np.cumsum(distances).tolist()

    # the cumulative curve starts at 0 on the first snapshot
    res_dist = resample_to(steps, [0.0] + cumulative, cfg.correlation_points)
    if len(metrics) < 2:
        raise DegenerateDomain("need at least two validation points")
    res_acc = resample_to(metrics.steps, metrics.accuracies, cfg.correlation_points)
    r = pearson(res_dist, res_acc)
    return ConvergenceReport(
        steps=list(steps),
        distances=distances,
        cumulative=cumulative,
        resampled_distance=res_dist.tolist(),
        resampled_accuracy=res_acc.tolist(),
        pearson_r=r,
        distance_kind=cfg.distance_kind,
    )


def analyze_states(
    states: Sequence[NetworkState],
    metrics: MetricSeries,
    cfg: PipelineConfig = PipelineConfig(),
    jobs: Optional[int] = 1,
) -> ConvergenceReport:
    if len(states) < 2:
        raise InsufficientSnapshots(f"need at least 2 snapshots, got {len(states)}")
    steps = [s.step for s in states]
    return _assemble(steps, _feature_stream(list(states), _features_from_state, cfg, jobs), metrics, cfg)


def analyze_run(
    snapshot_dir,
    metrics: MetricSeries,
    cfg: PipelineConfig = PipelineConfig(),
    jobs: Optional[int] = None,
) -> ConvergenceReport:
    """Run the full pipeline over every ``step_*.nnph`` file in ``snapshot_dir``."""
    paths = list_snapshots(snapshot_dir)
    if len(paths) < 2:
        raise InsufficientSnapshots(f"need at least 2 snapshots in {snapshot_dir}, found {len(paths)}")
    if len(metrics) == 0:
        raise DegenerateDomain("empty metric series")
    steps = [step_from_path(p) for p in paths]
    log.info("analyzing %d snapshots from %s", len(paths), snapshot_dir)
    return _assemble(steps, _feature_stream(paths, _features_from_path, cfg, jobs), metrics, cfg)
