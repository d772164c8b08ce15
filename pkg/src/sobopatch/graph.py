"""Weighted graphs whose edge measure follows the max rule.

A graph carries a positive measure on its vertices; the measure of an edge
is the larger of its two endpoint measures.  Vertices are dense integers
``0..N-1``; optional string labels live in a separate symbol table.
Graphs are immutable once built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateEdge,
    EmptyGraph,
    IndexOutOfRange,
    NonPositiveMeasure,
    SelfLoop,
)

__all__ = [
    "WeightedGraph",
    "build_graph",
    "boundary",
    "boundary_measure",
    "degree_and_comparability",
    "is_connected",
    "dumps_graph",
    "loads_graph",
    "read_graph",
    "write_graph",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Finite simple undirected graph with max-rule edge measures.

    Use :func:`build_graph` rather than the constructor; it validates the
    input and derives the edge measures.
    """

    vertex_measure: np.ndarray
    edges: tuple[tuple[int, int], ...]
    edge_measure: np.ndarray
    labels: tuple[str, ...] | None = None
    _neighbors: tuple[tuple[int, ...], ...] = field(default=(), repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_measure)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._neighbors[i]

    def degree(self, i: int) -> int:
        return len(self._neighbors[i])

    @property
    def edge_array(self) -> np.ndarray:
        """Edges as an ``(E, 2)`` integer array (row ``k`` is ``edges[k]``)."""
        if not self.edges:
            return np.zeros((0, 2), dtype=np.intp)
        return np.asarray(self.edges, dtype=np.intp)

    def total_edge_measure(self) -> float:
        return float(math.fsum(self.edge_measure))

    def laplacian(self) -> np.ndarray:
        """Dense weighted Laplacian ``sum_e m(e) (1_i - 1_j)(1_i - 1_j)^T``."""
        n = self.n_vertices
        L = np.zeros((n, n))
        for (i, j), w in zip(self.edges, self.edge_measure):
            L[i, i] += w
            L[j, j] += w
            L[i, j] -= w
            L[j, i] -= w
        return L

    def induced(self, vertices: Iterable[int]) -> tuple["WeightedGraph", np.ndarray]:
        """Subgraph induced on ``vertices``; returns it and the old indices.

        Vertex measures are copied, so edge measures are recomputed by the
        max rule from the same values and agree with the parent's.
        """
        keep = np.array(sorted(set(int(v) for v in vertices)), dtype=np.intp)
        pos = {int(v): k for k, v in enumerate(keep)}
        sub_edges = [(pos[i], pos[j]) for i, j in self.edges if i in pos and j in pos]
        return build_graph(self.vertex_measure[keep], sub_edges), keep

    def relabel(self, perm: Sequence[int]) -> "WeightedGraph":
        """Graph with vertex ``v`` renamed ``perm[v]``."""
        perm = list(perm)
        if sorted(perm) != list(range(self.n_vertices)):
            raise IndexOutOfRange("relabel needs a permutation of the vertex set")
        meas = np.empty(self.n_vertices)
        meas[perm] = self.vertex_measure
        return build_graph(meas, [(perm[i], perm[j]) for i, j in self.edges])

    def with_measures(self, vertex_measure: Sequence[float]) -> "WeightedGraph":
        return build_graph(vertex_measure, self.edges, labels=self.labels)


def build_graph(
    vertex_measures: Sequence[float],
    edges: Iterable[Sequence[int]],
    labels: Sequence[str] | None = None,
) -> WeightedGraph:
    """Validate the input and build a :class:`WeightedGraph`.

    Raises :class:`NonPositiveMeasure`, :class:`SelfLoop`,
    :class:`DuplicateEdge` or :class:`IndexOutOfRange`.
    """
    m = np.array(vertex_measures, dtype=float).reshape(-1)
    if not np.all(np.isfinite(m)) or np.any(m <= 0):
        bad = [int(i) for i in np.flatnonzero(~(np.isfinite(m) & (m > 0)))]
        raise NonPositiveMeasure(f"vertex measures must be positive and finite (vertices {bad})")
    n = len(m)
    seen: set[tuple[int, int]] = set()
    norm_edges: list[tuple[int, int]] = []
    for e in edges:
        i, j = int(e[0]), int(e[1])
        if not (0 <= i < n and 0 <= j < n):
            raise IndexOutOfRange(f"edge ({i}, {j}) outside 0..{n - 1}")
        if i == j:
            raise SelfLoop(f"self-loop at vertex {i}")
        key = (i, j) if i < j else (j, i)
        if key in seen:
            raise DuplicateEdge(f"edge {key} given twice")
        seen.add(key)
        norm_edges.append(key)
    norm_edges.sort()
    em = np.array([max(m[i], m[j]) for i, j in norm_edges], dtype=float)
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for i, j in norm_edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    if labels is not None:
        labels = tuple(str(s) for s in labels)
        if len(labels) != n:
            raise IndexOutOfRange("one label per vertex required")
    return WeightedGraph(
        vertex_measure=_frozen(m),
        edges=tuple(norm_edges),
        edge_measure=_frozen(em),
        labels=labels,
        _neighbors=tuple(tuple(sorted(nb)) for nb in nbrs),
    )


def _check_subset(graph: WeightedGraph, omega: Iterable[int]) -> frozenset[int]:
    s = frozenset(int(v) for v in omega)
    for v in s:
        if not 0 <= v < graph.n_vertices:
            raise IndexOutOfRange(f"vertex {v} not in graph")
    return s


def boundary(graph: WeightedGraph, omega: Iterable[int]) -> set[tuple[int, int]]:
    """Edges with exactly one endpoint in ``omega``."""
    s = _check_subset(graph, omega)
    return {(i, j) for i, j in graph.edges if (i in s) != (j in s)}


def boundary_measure(graph: WeightedGraph, omega: Iterable[int]) -> float:
    s = _check_subset(graph, omega)
    return float(
        math.fsum(w for (i, j), w in zip(graph.edges, graph.edge_measure) if (i in s) != (j in s))
    )


def degree_and_comparability(graph: WeightedGraph) -> tuple[int, float]:
    """Maximal degree ``d`` and the smallest ``C >= 1`` bounding neighbour ratios."""
    if graph.n_vertices == 0:
        raise EmptyGraph("graph has no vertices")
    d = max(graph.degree(i) for i in range(graph.n_vertices))
    m = graph.vertex_measure
    C = 1.0
    for i, j in graph.edges:
        C = max(C, m[i] / m[j], m[j] / m[i])
    return d, float(C)


def is_connected(graph: WeightedGraph, vertices: Iterable[int] | None = None) -> bool:
    """Connectivity of the graph (or of the subgraph induced on ``vertices``)."""
    allowed = set(range(graph.n_vertices)) if vertices is None else set(vertices)
    if not allowed:
        return True
    start = next(iter(allowed))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in graph.neighbors(v):
            if w in allowed and w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(allowed)


# -- edge-list text format ---------------------------------------------------


def dumps_graph(graph: WeightedGraph) -> str:
    lines = [f"graph {graph.n_vertices}"]
    lines += [f"v {i} {float(x)!r}" for i, x in enumerate(graph.vertex_measure)]
    lines += [f"e {i} {j}" for i, j in graph.edges]
    return "\n".join(lines) + "\n"


def loads_graph(text: str) -> WeightedGraph:
    n = None
    meas: dict[int, float] = {}
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        tok = raw.split()
        if not tok or tok[0].startswith("#"):
            continue
        try:
            if tok[0] == "graph":
                n = int(tok[1])
            elif tok[0] == "v":
                meas[int(tok[1])] = float(tok[2])
            elif tok[0] == "e":
                edges.append((int(tok[1]), int(tok[2])))
            else:
                raise ValueError(f"unknown record {tok[0]!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if n is None:
        raise ValueError("missing 'graph <N>' header")
    if sorted(meas) != list(range(n)):
        raise IndexOutOfRange(f"expected measures for vertices 0..{n - 1}")
    return build_graph([meas[i] for i in range(n)], edges)


def read_graph(path) -> WeightedGraph:
    with open(path, encoding="utf-8") as fh:
        return loads_graph(fh.read())


def write_graph(graph: WeightedGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_graph(graph))
