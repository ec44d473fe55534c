"""Persistent homology over Z2 by column reduction of the boundary matrix.

Columns are Python ints used as bitsets over cell positions in reduction
order, so adding two columns is a single XOR and the pivot ("low") of a
column is ``bit_length() - 1``. Dimensions are reduced top-down with
clearing: once a column of dimension k+1 has pivot i, column i is known to
reduce to zero and is skipped in the dimension-k pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import CapacityExceeded
from .flag_complex import FilteredComplex, boundary, cells_at, default_cell_budget

ORACLE_CELL_LIMIT = 2000


@dataclass
class PersistenceDiagram:
    """Intervals ``(birth, death)`` of one homology degree; death may be ``inf``."""

    dim: int
    intervals: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        self.intervals = np.asarray(self.intervals, dtype=np.float64).reshape(-1, 2)

    def __len__(self):
        return self.intervals.shape[0]

    @property
    def births(self) -> np.ndarray:
        return self.intervals[:, 0]

    @property
    def deaths(self) -> np.ndarray:
        return self.intervals[:, 1]

    def n_infinite(self) -> int:
        return int(np.isinf(self.deaths).sum())

    def as_pairs(self) -> List[tuple]:
        return sorted(map(tuple, self.intervals.tolist()))


@dataclass
class BettiProfile:
    eps: float
    betti: Dict[int, int]

    def __getitem__(self, dim: int) -> int:
        return self.betti.get(dim, 0)


def boundary_columns(complex_: FilteredComplex, max_cell_dim: int) -> List[int]:
    """Boundary column of every cell up to ``max_cell_dim`` as a bitset of facet positions."""
    index = complex_.index
    cols = []
    for c in complex_.cells:
        if c.dim == 0 or c.dim > max_cell_dim:
            cols.append(0)
            continue
        col = 0
        for face in boundary(c):
            col |= 1 << index[face]
        cols.append(col)
    return cols


def reduce_boundary(complex_: FilteredComplex, max_dim: int):
    """Pair cells of dimension <= ``max_dim`` + 1 by standard column reduction.

    Returns ``(pairs, essential)``: ``pairs`` lists ``(birth_pos, death_pos)``
    and ``essential`` the positions of cells of dimension <= ``max_dim`` that
    create a class which never dies.
    """
    cells = complex_.cells
    dims = [c.dim for c in cells]
    top = max_dim + 1
    columns = boundary_columns(complex_, top)

    by_dim: Dict[int, List[int]] = {}
    for pos, d in enumerate(dims):
        by_dim.setdefault(d, []).append(pos)

    pairs = []
    cleared = set()
    deaths = set()
    for d in range(top, 0, -1):
        pivots: Dict[int, int] = {}
        next_cleared = set()
        for j in by_dim.get(d, ()):
            if j in cleared:
                continue
            col = columns[j]
            while col:
                low = col.bit_length() - 1
                other = pivots.get(low)
                if other is None:
                    break
                col ^= other
            if col:
                pivots[low] = col
                pairs.append((low, j))
                deaths.add(j)
                next_cleared.add(low)
        cleared = next_cleared

    births = {b for b, _ in pairs}
    essential = [
        pos for pos, d in enumerate(dims)
        if d <= max_dim and pos not in births and pos not in deaths
    ]
    return pairs, essential


def compute_persistence(
    complex_: FilteredComplex,
    max_dim: int = 3,
    cell_budget: Optional[int] = None,
) -> List[PersistenceDiagram]:
    """Persistence diagrams of dimensions ``0..max_dim``.

    Zero-length intervals (birth == death) are kept; see
    :func:`topoconverge.diagrams.clean` for filtering.
    """
    if max_dim < 0:
        raise ValueError("max_dim must be non-negative")
    if max_dim > complex_.top_dim - 1:
        raise ValueError(
            f"max_dim={max_dim} needs cells up to dimension {max_dim + 1}, "
            f"complex was built with top_dim={complex_.top_dim}"
        )
    budget = default_cell_budget() if cell_budget is None else cell_budget
    if len(complex_) > budget:
        raise CapacityExceeded(f"boundary matrix of {len(complex_)} cells exceeds budget {budget}")

    cells = complex_.cells
    pairs, essential = reduce_boundary(complex_, max_dim)
    per_dim: List[List[tuple]] = [[] for _ in range(max_dim + 1)]
    for b, d in sorted(pairs):
        per_dim[cells[b].dim].append((cells[b].filtration, cells[d].filtration))
    for b in essential:
        per_dim[cells[b].dim].append((cells[b].filtration, math.inf))
    return [PersistenceDiagram(k, sorted(iv)) for k, iv in enumerate(per_dim)]


def betti_at(diagrams: Sequence[PersistenceDiagram], eps: float) -> BettiProfile:
    """Number of intervals alive at ``eps`` (``birth <= eps < death``) per dimension."""
    betti = {}
    for dgm in diagrams:
        b, d = dgm.births, dgm.deaths
        betti[dgm.dim] = int(np.count_nonzero((b <= eps) & (eps < d)))
    return BettiProfile(eps, betti)


def _gf2_rank(m: np.ndarray) -> int:
    """Rank over Z2 of a dense 0/1 matrix by row elimination."""
    m = (m.astype(np.uint8) & 1).copy()
    rows, cols = m.shape
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        hits = np.nonzero(m[rank:, c])[0]
        if hits.size == 0:
            continue
        p = rank + hits[0]
        if p != rank:
            m[[rank, p]] = m[[p, rank]]
        below = np.nonzero(m[rank + 1:, c])[0] + rank + 1
        m[below] ^= m[rank]
        rank += 1
    return rank


def brute_force_betti(complex_: FilteredComplex, eps: float, max_dim: Optional[int] = None) -> BettiProfile:
    """Betti numbers of ``K_eps`` from dense boundary-matrix ranks.

    Independent of the reduction above and intended as a test oracle:
    ``beta_k = n_k - rank d_k - rank d_{k+1}``. Dimensions ``0..top_dim-1``
    are reported unless ``max_dim`` narrows them.
    """
    sub = cells_at(complex_, eps)
    if len(sub) > ORACLE_CELL_LIMIT:
        raise CapacityExceeded(f"{len(sub)} cells exceed the oracle limit {ORACLE_CELL_LIMIT}")
    top = complex_.top_dim - 1 if max_dim is None else max_dim
    groups: Dict[int, List[tuple]] = {}
    for c in sub:
        groups.setdefault(c.dim, []).append(c.vertices)

    def rank(k: int) -> int:
        # rank of the boundary map from k-cells to (k-1)-cells
        if k == 0 or not groups.get(k) or not groups.get(k - 1):
            return 0
        row_of = {v: i for i, v in enumerate(groups[k - 1])}
        m = np.zeros((len(groups[k - 1]), len(groups[k])), dtype=np.uint8)
        for j, verts in enumerate(groups[k]):
            for face in boundary(verts):
                m[row_of[face], j] ^= 1
        return _gf2_rank(m)

    ranks = {k: rank(k) for k in range(top + 2)}
    betti = {k: len(groups.get(k, ())) - ranks[k] - ranks[k + 1] for k in range(top + 1)}
    return BettiProfile(eps, betti)


def diagrams_to_rows(diagrams: Sequence[PersistenceDiagram]):
    for dgm in diagrams:
        for b, d in dgm.intervals.tolist():
            yield dgm.dim, b, d
