"""Acyclic augmentation of the redemption graph.

Lending cycles make the default indicators path-dependent, so each firm i is
replicated once per member of its strongly connected component: vertices
(i, 1), ..., (i, N_i), where copy n stands for firm i's status after n
cascade rounds within its component.  Edges come in four families:

  (a) (j, N_j) -> (i, n) for every cross-component parent j of i, all n;
  (b) (i, n)   -> (i, n+1)  consecutive copies of the same firm;
  (c) (j, n)   -> (i, n+1)  same-component parent, consecutive rounds;
  (d) (j, n)   -> (i, n+2)  same-component parent, next-but-one round.

The result is always a DAG, and when the input graph already is one the
augmentation is a vertex-per-firm copy of it.

Vertices are (firm, copy) pairs with 1-based copies; the dense arena order
(firms ascending, copies ascending) and a smallest-id-first Kahn peel make
vertex numbering and the topological order deterministic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .netmodel import RedemptionGraph, SccDecomposition

__all__ = ["AugVertex", "AugmentedGraph", "acyclic_augmentation", "verify_dag", "witness_cycle", "to_dot"]

AugVertex = tuple[int, int]


@dataclass(frozen=True)
class AugmentedGraph:
    """Directed graph over (firm, copy) vertices with precomputed adjacency.

    ``parents_of`` returns parents in the fixed order used for conditional
    probability tables: cross-component parents by firm index, then the own
    previous copy, then same-component parents at offset one (by firm), then
    at offset two.  For hand-built graphs (no component structure) parents
    are simply sorted.
    """

    vertices: tuple[AugVertex, ...]
    edges: frozenset[tuple[AugVertex, AugVertex]]
    copies_per_firm: tuple[int, ...]
    topological_order: tuple[AugVertex, ...] | None = None
    _parents: dict = field(default_factory=dict, compare=False, repr=False)
    _children: dict = field(default_factory=dict, compare=False, repr=False)
    _ids: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self._parents:
            parents: dict[AugVertex, list[AugVertex]] = {v: [] for v in self.vertices}
            children: dict[AugVertex, list[AugVertex]] = {v: [] for v in self.vertices}
            for a, b in sorted(self.edges):
                parents[b].append(a)
                children[a].append(b)
            self._parents.update({v: tuple(ps) for v, ps in parents.items()})
            self._children.update({v: tuple(cs) for v, cs in children.items()})
        self._ids.update({v: k for k, v in enumerate(self.vertices)})

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    def vertex_id(self, v: AugVertex) -> int:
        return self._ids[v]

    def final_vertex(self, firm: int) -> AugVertex:
        return (firm, self.copies_per_firm[firm])

    def parents_of(self, v: AugVertex) -> tuple[AugVertex, ...]:
        return self._parents[v]

    def children_of(self, v: AugVertex) -> tuple[AugVertex, ...]:
        return self._children[v]


def acyclic_augmentation(g: RedemptionGraph, scc: SccDecomposition) -> AugmentedGraph:
    """Replicate each firm over its component size and wire the four families."""
    n = g.num_vertices
    sizes = scc.component_size_of
    vertices: list[AugVertex] = [(i, c) for i in range(n) for c in range(1, sizes[i] + 1)]

    parents: dict[AugVertex, list[AugVertex]] = {v: [] for v in vertices}
    edges: set[tuple[AugVertex, AugVertex]] = set()

    def connect(src: AugVertex, dst: AugVertex) -> None:
        edges.add((src, dst))
        parents[dst].append(src)

    for i in range(n):
        same = sorted(j for j in g.parents_of(i) if scc.component_of[j] == scc.component_of[i])
        cross = sorted(j for j in g.parents_of(i) if scc.component_of[j] != scc.component_of[i])
        for copy in range(1, sizes[i] + 1):
            for j in cross:
                connect((j, sizes[j]), (i, copy))
            if copy > 1:
                connect((i, copy - 1), (i, copy))
                for j in same:
                    connect((j, copy - 1), (i, copy))
            if copy > 2:
                for j in same:
                    connect((j, copy - 2), (i, copy))

    graph = AugmentedGraph(
        vertices=tuple(vertices),
        edges=frozenset(edges),
        copies_per_firm=tuple(sizes),
        topological_order=None,
        _parents={v: tuple(ps) for v, ps in parents.items()},
        _children={},
    )
    # children still need filling; rebuild that side from the edge set
    children: dict[AugVertex, list[AugVertex]] = {v: [] for v in vertices}
    for a, b in sorted(edges):
        children[a].append(b)
    graph._children.update({v: tuple(cs) for v, cs in children.items()})

    order = _kahn_order(graph)
    if order is None:
        raise AssertionError("augmentation produced a cycle; this is a bug")
    object.__setattr__(graph, "topological_order", tuple(order))
    return graph


def _kahn_order(g: AugmentedGraph) -> list[AugVertex] | None:
    """Smallest-vertex-first topological peel; None when a cycle remains."""
    ids = {v: k for k, v in enumerate(g.vertices)}
    indeg = {v: len(g.parents_of(v)) for v in g.vertices}
    heap = [(ids[v], v) for v in g.vertices if indeg[v] == 0]
    heapq.heapify(heap)
    order: list[AugVertex] = []
    while heap:
        _, v = heapq.heappop(heap)
        order.append(v)
        for w in g.children_of(v):
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, (ids[w], w))
    if len(order) != g.num_vertices:
        return None
    return order


def verify_dag(g: AugmentedGraph) -> bool:
    return _kahn_order(g) is not None


def witness_cycle(g: AugmentedGraph) -> list[AugVertex] | None:
    """A vertex sequence closing a directed cycle, or None for a DAG."""
    if _kahn_order(g) is not None:
        return None
    # peel parent-free vertices; what remains contains a cycle, so walking
    # parents from any survivor must revisit a vertex
    alive = set(g.vertices)
    changed = True
    while changed:
        changed = False
        for v in sorted(alive):
            if all(p not in alive for p in g.parents_of(v)):
                alive.discard(v)
                changed = True
    start = min(alive)
    walk = [start]
    seen = {start: 0}
    v = start
    while True:
        v = next(p for p in g.parents_of(v) if p in alive)
        if v in seen:
            return list(reversed(walk[seen[v]:]))
        seen[v] = len(walk)
        walk.append(v)


def to_dot(g: AugmentedGraph, one_based_firms: bool = True) -> str:
    """Graphviz text form; vertices labeled firm.copy."""
    shift = 1 if one_based_firms else 0

    def label(v: AugVertex) -> str:
        return f"\"{v[0] + shift}.{v[1]}\""

    lines = ["digraph augmented {"]
    for v in g.vertices:
        lines.append(f"  {label(v)};")
    for a, b in sorted(g.edges):
        lines.append(f"  {label(a)} -> {label(b)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
