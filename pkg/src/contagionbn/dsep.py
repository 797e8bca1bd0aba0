"""d-separation on redemption graphs and their augmentations.

Two vertex sets are d-separated given a conditioning set when every chain
between them is blocked: a serial or diverging connection is blocked by an
observed middle vertex, a collider is blocked unless the collider or one of
its descendants is observed.  The production decision procedure is
ball-passing reachability over (vertex, arrival direction) states, linear
in the graph size; an explicit chain enumerator over simple chains is kept
as an independent oracle for testing.

Both work on plain directed graphs, cyclic or not; the graph object only
needs ``vertices``, ``parents_of`` and ``children_of``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable

__all__ = [
    "SeparationQuery",
    "d_separated",
    "d_separated_by_chains",
    "firm_independence",
    "map_firms_to_copies",
]


@dataclass(frozen=True)
class SeparationQuery:
    """Pairwise-disjoint vertex sets: are v1 and v2 separated given v0?"""

    v1: frozenset
    v2: frozenset
    v0: frozenset = frozenset()

    def __post_init__(self):
        if self.v1 & self.v2 or self.v1 & self.v0 or self.v2 & self.v0:
            raise ValueError("v1, v2 and v0 must be pairwise disjoint")


def _coerce(q_or_v1, v2=None, v0=None) -> SeparationQuery:
    if isinstance(q_or_v1, SeparationQuery):
        return q_or_v1
    return SeparationQuery(frozenset(q_or_v1), frozenset(v2), frozenset(v0 or ()))


def d_separated(graph, q_or_v1, v2=None, v0=None) -> bool:
    """Decide d-separation by active-trail reachability.

    States are (vertex, how we arrived): "in" via an edge pointing at the
    vertex, "out" via a reversed edge.  Leaving forward requires the vertex
    to be unobserved; leaving backward requires either an unobserved
    non-collider passage or an activated collider (observed itself or with
    an observed descendant).
    """
    q = _coerce(q_or_v1, v2, v0)
    observed = q.v0
    collider_ok = _ancestors_of_set(graph, observed) | observed

    seen: set[tuple[Hashable, str]] = set()
    stack: list[tuple[Hashable, str]] = []
    for s in q.v1:
        for w in graph.children_of(s):
            stack.append((w, "in"))
        for u in graph.parents_of(s):
            stack.append((u, "out"))
    while stack:
        state = stack.pop()
        if state in seen:
            continue
        seen.add(state)
        v, mode = state
        if v in q.v2:
            return False
        # continue forward through v (serial or diverging passage)
        if v not in observed:
            for w in graph.children_of(v):
                stack.append((w, "in"))
        # continue backward through v
        if (mode == "in" and v in collider_ok) or (mode == "out" and v not in observed):
            for u in graph.parents_of(v):
                stack.append((u, "out"))
    return True


def _ancestors_of_set(graph, targets: frozenset) -> frozenset:
    seen: set = set()
    stack = [u for t in targets for u in graph.parents_of(t)]
    while stack:
        v = stack.pop()
        if v not in seen:
            seen.add(v)
            stack.extend(graph.parents_of(v))
    return frozenset(seen)


def d_separated_by_chains(graph, q_or_v1, v2=None, v0=None) -> bool:
    """Reference oracle: enumerate simple chains and apply the blocking rules.

    Exponential; intended for small graphs in tests.  A chain is a vertex
    sequence with an orientation chosen for each step; it is active when no
    internal triple is blocked.
    """
    q = _coerce(q_or_v1, v2, v0)
    observed = q.v0
    desc = {v: _descendants(graph, v) for v in graph.vertices}

    def triple_active(prev_mode: str, v, next_mode: str) -> bool:
        # prev_mode: direction of the edge arriving at v ("in" = points at v)
        # next_mode: direction of the edge leaving v ("out" = points away)
        if prev_mode == "in" and next_mode == "in":  # collider -> v <-
            return v in observed or bool(desc[v] & observed)
        return v not in observed

    def extend(v, arrive_mode: str, visited: frozenset) -> bool:
        for w in graph.children_of(v):
            if w in visited:
                continue
            if triple_active(arrive_mode, v, "out"):
                if w in q.v2 or extend(w, "in", visited | {w}):
                    return True
        for u in graph.parents_of(v):
            if u in visited:
                continue
            # leaving via an edge pointing at v
            if triple_active(arrive_mode, v, "in"):
                if u in q.v2 or extend(u, "out", visited | {u}):
                    return True
        return False

    for s in q.v1:
        for w in graph.children_of(s):
            if w in q.v2 or (w not in q.v1 and extend(w, "in", frozenset({s, w}))):
                return False
        for u in graph.parents_of(s):
            if u in q.v2 or (u not in q.v1 and extend(u, "out", frozenset({s, u}))):
                return False
    return True


def _descendants(graph, v) -> frozenset:
    seen: set = set()
    stack = list(graph.children_of(v))
    while stack:
        w = stack.pop()
        if w not in seen:
            seen.add(w)
            stack.extend(graph.children_of(w))
    return frozenset(seen)


def map_firms_to_copies(gbar, v1: Iterable[int], v2: Iterable[int], v0: Iterable[int]) -> SeparationQuery:
    """Lift a firm-level query to the augmentation: terminal copies for the
    two queried groups, every copy for the conditioning firms."""
    finals1 = frozenset(gbar.final_vertex(i) for i in v1)
    finals2 = frozenset(gbar.final_vertex(i) for i in v2)
    all0 = frozenset(
        (i, n) for i in v0 for n in range(1, gbar.copies_per_firm[i] + 1)
    )
    return SeparationQuery(finals1, finals2, all0)


def firm_independence(g, gbar, v1: Iterable[int], v2: Iterable[int], v0: Iterable[int] = ()) -> bool:
    """Certified independence of two groups' default indicators.

    Checks d-separation of the terminal copies in the augmentation given
    every copy of the conditioning firms.  A True verdict is sound: the
    groups' defaults are independent given the conditioning firms' default
    histories (for terminal-default evidence this matches the strict rule,
    where failure pins all earlier round variables).  False means no
    graphical certificate, not a proof of dependence.
    """
    v1, v2, v0 = frozenset(v1), frozenset(v2), frozenset(v0)
    for i in v1 | v2 | v0:
        if not 0 <= i < g.num_vertices:
            raise ValueError(f"firm index {i} outside the network")
    return d_separated(gbar, map_firms_to_copies(gbar, v1, v2, v0))
