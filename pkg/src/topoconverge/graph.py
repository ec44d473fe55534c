"""Weighted directed graph of an MLP state.

Each neuron becomes a vertex. A weight ``w`` from neuron ``u`` to neuron ``v``
becomes the edge ``u -> v`` when ``w >= 0`` and ``v -> u`` when ``w < 0``.
Each layer with biases gets one extra vertex feeding that layer's neurons.
Edge values are ``max(1 - |w| / max|W|, zeta)`` with a single scale taken over
every weight and bias, so the strongest connections sit near ``zeta`` and
enter a sublevel filtration first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Tuple

import numpy as np

from .errors import DegenerateScale, EdgeCollision
from .snapshot_io import NetworkState

DEFAULT_ZETA = 1e-6


@dataclass(frozen=True)
class NormalizationParams:
    zeta: float = DEFAULT_ZETA

    def __post_init__(self):
        if not 0.0 < self.zeta < 1.0:
            raise ValueError(f"zeta must lie in (0, 1), got {self.zeta}")


def normalize_weight(w: float, w_absmax: float, params: NormalizationParams = NormalizationParams()) -> float:
    if w_absmax == 0:
        raise DegenerateScale("maximum absolute weight is zero")
    return max(1.0 - abs(w) / w_absmax, params.zeta)


@dataclass
class FilteredDigraph:
    """Directed graph whose edges carry a filtration value.

    ``src``, ``dst`` and ``filtration`` are parallel arrays, one entry per edge.
    """

    vertex_count: int
    src: np.ndarray
    dst: np.ndarray
    filtration: np.ndarray

    def __post_init__(self):
        self.src = np.asarray(self.src, dtype=np.int64).reshape(-1)
        self.dst = np.asarray(self.dst, dtype=np.int64).reshape(-1)
        self.filtration = np.asarray(self.filtration, dtype=np.float64).reshape(-1)
        if not (self.src.shape == self.dst.shape == self.filtration.shape):
            raise ValueError("src, dst and filtration must have equal length")

    @classmethod
    def from_edges(cls, vertex_count: int, edges) -> "FilteredDigraph":
        """Build from an iterable of ``(src, dst, filtration)`` triples."""
        edges = list(edges)
        if not edges:
            return cls(vertex_count, [], [], [])
        src, dst, filt = zip(*edges)
        g = cls(vertex_count, src, dst, filt)
        g.check()
        return g

    @property
    def edge_count(self) -> int:
        return int(self.src.size)

    def edges(self) -> Iterator[Tuple[int, int, float]]:
        for u, v, f in zip(self.src.tolist(), self.dst.tolist(), self.filtration.tolist()):
            yield u, v, f

    def edge_map(self) -> Dict[Tuple[int, int], float]:
        return {(u, v): f for u, v, f in self.edges()}

    def check(self) -> None:
        """Raise if the graph has loops, duplicate edges or out-of-range ids."""
        n = self.vertex_count
        if self.edge_count == 0:
            return
        if self.src.min() < 0 or self.dst.min() < 0 or max(self.src.max(), self.dst.max()) >= n:
            raise ValueError("edge endpoint out of range")
        if np.any(self.src == self.dst):
            raise ValueError("self-loops are not allowed")
        keys = self.src * n + self.dst
        if np.unique(keys).size != keys.size:
            raise EdgeCollision("more than one edge for an ordered vertex pair")
        if np.any(~np.isfinite(self.filtration)):
            raise ValueError("non-finite edge filtration")


def vertex_layout(state: NetworkState) -> List[range]:
    """Vertex ids of each neuron layer (input layer first), then of the bias vertices."""
    sizes = [state.layers[0].cols] + [layer.rows for layer in state.layers]
    out, start = [], 0
    for size in sizes:
        out.append(range(start, start + size))
        start += size
    return out


def build_graph(state: NetworkState, params: NormalizationParams = NormalizationParams()) -> FilteredDigraph:
    state.validate()
    layout = vertex_layout(state)
    next_vertex = layout[-1].stop

    params_all = [l.weights.astype(np.float64).ravel() for l in state.layers]
    params_all += [l.bias.astype(np.float64) for l in state.layers if l.has_bias]
    absmax = max(float(np.max(np.abs(p))) for p in params_all)
    if absmax == 0.0:
        raise DegenerateScale("all network parameters are zero")

    src, dst, filt = [], [], []

    def add(u: np.ndarray, v: np.ndarray, values: np.ndarray) -> None:
        forward = values >= 0
        src.append(np.where(forward, u, v))
        dst.append(np.where(forward, v, u))
        filt.append(np.maximum(1.0 - np.abs(values) / absmax, params.zeta))

    for i, layer in enumerate(state.layers):
        ins = np.asarray(layout[i])
        outs = np.asarray(layout[i + 1])
        w = layer.weights.astype(np.float64)
        # w[r, c] connects input c to output r
        add(np.broadcast_to(ins, w.shape).ravel(), np.repeat(outs, layer.cols), w.ravel())
        if layer.has_bias:
            b = next_vertex
            next_vertex += 1
            add(np.full(layer.rows, b), outs, layer.bias.astype(np.float64))

    g = FilteredDigraph(
        next_vertex,
        np.concatenate(src),
        np.concatenate(dst),
        np.concatenate(filt),
    )
    g.check()
    return g
