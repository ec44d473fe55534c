"""Independent reference computations used by the tests.

Nothing here imports the code paths it checks: cliques come from
enumerating vertex tuples, matchings from enumerating partial bijections.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from topoconverge.graph import FilteredDigraph


def random_digraph(rng: np.random.Generator, n: int, density: float, distinct: bool = False) -> FilteredDigraph:
    """Each ordered pair (u, v), u != v, is an edge with probability ``density``.

    Filtrations are drawn from a small set of values unless ``distinct``, so
    ties between cells of different dimensions get exercised.
    """
    edges = []
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < density:
                if distinct:
                    f = float(rng.uniform(1e-6, 1.0))
                else:
                    f = float(rng.choice([0.1, 0.25, 0.5, 0.75, 1.0]))
                edges.append((u, v, f))
    return FilteredDigraph.from_edges(n, edges)


def enumerate_flag_cells(n: int, edge_map: dict, top_dim: int) -> dict:
    """All ordered cliques by brute force over vertex tuples: {tuple: filtration}."""
    cells = {(v,): 0.0 for v in range(n)}
    for k in range(1, top_dim + 1):
        for tup in itertools.permutations(range(n), k + 1):
            pairs = [(tup[i], tup[j]) for i in range(k + 1) for j in range(i + 1, k + 1)]
            if all(p in edge_map for p in pairs):
                cells[tup] = max(edge_map[p] for p in pairs)
    return cells


def _diag_cost(pt) -> float:
    return (pt[1] - pt[0]) / 2.0


def _linf(a, b) -> float:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def partial_matchings(m: int, n: int):
    """Every injective partial map from range(m) into range(n), as lists with None for unmatched."""
    def rec(i, used):
        if i == m:
            yield []
            return
        for rest in rec(i + 1, used):
            yield [None] + rest
        for j in range(n):
            if j not in used:
                for rest in rec(i + 1, used | {j}):
                    yield [j] + rest
    yield from rec(0, frozenset())


def matching_cost_terms(d1, d2, assignment):
    terms = []
    used = set()
    for i, j in enumerate(assignment):
        if j is None:
            terms.append(_diag_cost(d1[i]))
        else:
            used.add(j)
            terms.append(_linf(d1[i], d2[j]))
    terms.extend(_diag_cost(d2[j]) for j in range(len(d2)) if j not in used)
    return terms


def brute_bottleneck(d1, d2) -> float:
    d1, d2 = [tuple(p) for p in d1], [tuple(p) for p in d2]
    best = math.inf
    for a in partial_matchings(len(d1), len(d2)):
        terms = matching_cost_terms(d1, d2, a)
        best = min(best, max(terms, default=0.0))
    return best


def brute_wasserstein(d1, d2, p: float) -> float:
    d1, d2 = [tuple(x) for x in d1], [tuple(x) for x in d2]
    best = math.inf
    for a in partial_matchings(len(d1), len(d2)):
        terms = matching_cost_terms(d1, d2, a)
        best = min(best, sum(t ** p for t in terms))
    return best ** (1.0 / p)


def random_diagram(rng: np.random.Generator, max_points: int):
    k = int(rng.integers(0, max_points + 1))
    births = rng.uniform(0, 1, size=k)
    deaths = births + rng.uniform(0, 1, size=k) * (1 - births)
    return np.stack([births, deaths], axis=1) if k else np.zeros((0, 2))


def clique_complex_betti(n: int, undirected_edges, max_dim: int):
    """Betti numbers of the undirected clique complex, by dense Z2 ranks over numpy.

    Test utility: a digraph oriented along a total vertex order has a directed
    flag complex isomorphic to this clique complex.
    """
    adj = {frozenset(e) for e in undirected_edges}
    simplices = {0: [(v,) for v in range(n)]}
    for k in range(1, max_dim + 2):
        simplices[k] = [
            s for s in itertools.combinations(range(n), k + 1)
            if all(frozenset(p) in adj for p in itertools.combinations(s, 2))
        ]

    def rank(k):
        if k == 0 or not simplices[k] or not simplices[k - 1]:
            return 0
        row = {s: i for i, s in enumerate(simplices[k - 1])}
        m = np.zeros((len(simplices[k - 1]), len(simplices[k])), dtype=np.int64)
        for j, s in enumerate(simplices[k]):
            for face in itertools.combinations(s, k):
                m[row[face], j] = 1
        return gf2_rank_reference(m)

    ranks = [rank(k) for k in range(max_dim + 2)]
    return [len(simplices[k]) - ranks[k] - ranks[k + 1] for k in range(max_dim + 1)]


def gf2_rank_reference(m: np.ndarray) -> int:
    """Rank over Z2 via integer bit rows (column-major pivoting), separate from the package's."""
    rows = [int("".join(str(int(x) & 1) for x in r), 2) if r.size else 0 for r in m]
    rank = 0
    while rows:
        pivot = max(rows)
        rows.remove(pivot)
        if pivot == 0:
            break
        rank += 1
        top = pivot.bit_length() - 1
        rows = [r ^ pivot if (r >> top) & 1 else r for r in rows]
    return rank
