"""Filtered directed flag complex of a :class:`FilteredDigraph`.

A k-cell is an ordered (k+1)-clique ``(v0, ..., vk)`` with an edge
``vi -> vj`` for every ``i < j``. Its filtration value is the largest value
among those edges; vertices sit at 0.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .errors import CapacityExceeded
from .graph import FilteredDigraph

DEFAULT_TOP_DIM = 4
DEFAULT_CELL_BUDGET = 50_000_000
CELL_BUDGET_ENV = "TOPOCONVERGE_CELL_BUDGET"


def default_cell_budget() -> int:
    raw = os.environ.get(CELL_BUDGET_ENV)
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"{CELL_BUDGET_ENV}={raw!r} is not an integer") from None
    return DEFAULT_CELL_BUDGET


@dataclass(frozen=True, slots=True)
class FilteredCell:
    vertices: Tuple[int, ...]
    filtration: float

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    def sort_key(self):
        return (self.filtration, len(self.vertices), self.vertices)


def boundary(cell) -> List[Tuple[int, ...]]:
    """Ordered facets of a cell (or plain vertex tuple), dropping vertex j for j = 0..k.

    Coefficients are implicit since everything is mod 2. A vertex has an empty boundary.
    """
    verts = cell.vertices if isinstance(cell, FilteredCell) else tuple(cell)
    if len(verts) <= 1:
        return []
    return [verts[:j] + verts[j + 1:] for j in range(len(verts))]


class FilteredComplex:
    """Cells sorted in reduction order ``(filtration, dim, vertex tuple)``.

    Immutable after construction. ``index`` maps a vertex tuple to its position
    in ``cells``.
    """

    def __init__(self, cells: Iterable[FilteredCell], top_dim: int):
        self.top_dim = top_dim
        self.cells: List[FilteredCell] = sorted(cells, key=FilteredCell.sort_key)
        self.index: Dict[Tuple[int, ...], int] = {c.vertices: i for i, c in enumerate(self.cells)}
        if len(self.index) != len(self.cells):
            raise ValueError("duplicate cells")

    def __len__(self):
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def __contains__(self, vertices) -> bool:
        return tuple(vertices) in self.index

    def cell(self, vertices) -> FilteredCell:
        return self.cells[self.index[tuple(vertices)]]

    def facets(self, cell: FilteredCell) -> List[FilteredCell]:
        return [self.cell(f) for f in boundary(cell)]

    def by_dim(self, dim: int) -> List[FilteredCell]:
        return [c for c in self.cells if c.dim == dim]

    def counts(self) -> List[int]:
        out = [0] * (self.top_dim + 1)
        for c in self.cells:
            out[c.dim] += 1
        return out

    def filtration_values(self) -> List[float]:
        return sorted({c.filtration for c in self.cells})

    def dump(self) -> str:
        """One line per cell, ``dim filtration v0 ... vk``, in reduction order."""
        lines = [
            " ".join([str(c.dim), repr(c.filtration)] + [str(v) for v in c.vertices])
            for c in self.cells
        ]
        return "\n".join(lines) + ("\n" if lines else "")


def build_flag_complex(
    g: FilteredDigraph,
    top_dim: int = DEFAULT_TOP_DIM,
    cell_budget: Optional[int] = None,
) -> FilteredComplex:
    """Enumerate every ordered clique with at most ``top_dim + 1`` vertices."""
    if top_dim < 0:
        raise ValueError("top_dim must be non-negative")
    budget = default_cell_budget() if cell_budget is None else cell_budget
    n = g.vertex_count
    if n > budget:
        raise CapacityExceeded(f"{n} vertices exceed the cell budget {budget}")

    out_mask = [0] * n
    weight: List[Dict[int, float]] = [dict() for _ in range(n)]
    for u, v, f in g.edges():
        out_mask[u] |= 1 << v
        weight[u][v] = f

    cells = [FilteredCell((v,), 0.0) for v in range(n)]
    if top_dim == 0:
        return FilteredComplex(cells, top_dim)

    # depth-first extension: the candidates for the next vertex are the common
    # out-neighbours of every vertex already in the clique
    stack = [((v,), 0.0, out_mask[v]) for v in range(n - 1, -1, -1) if out_mask[v]]
    while stack:
        verts, filt, shared = stack.pop()
        grow = len(verts) < top_dim
        candidates = shared
        while candidates:
            low = candidates & -candidates
            w = low.bit_length() - 1
            candidates ^= low
            f = filt
            for u in verts:
                x = weight[u][w]
                if x > f:
                    f = x
            clique = verts + (w,)
            cells.append(FilteredCell(clique, f))
            if grow:
                common = shared & out_mask[w]
                if common:
                    stack.append((clique, f, common))
        if len(cells) > budget:
            raise CapacityExceeded(f"flag complex exceeds the cell budget of {budget} cells")
    return FilteredComplex(cells, top_dim)


def cells_at(complex_: FilteredComplex, eps: float) -> List[FilteredCell]:
    """Cells of the sublevel complex ``K_eps`` (filtration <= eps), in reduction order."""
    out = []
    for c in complex_.cells:
        if c.filtration > eps:
            break
        out.append(c)
    return out
