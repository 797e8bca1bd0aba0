import numpy as np

from contagionbn import (
    acyclic_augmentation,
    build_redemption_graph,
    redemption_graph_from_edges,
    scc_decompose,
    to_dot,
    verify_dag,
    witness_cycle,
)
from contagionbn.augment import AugmentedGraph
from conftest import cycle_with_pendants_edges, five_firm_dag, two_firm_cycle


def build(n, edges):
    g = redemption_graph_from_edges(n, edges)
    return g, acyclic_augmentation(g, scc_decompose(g))


def test_dag_augmentation_is_isomorphic_copy():
    g = build_redemption_graph(five_firm_dag())
    gbar = acyclic_augmentation(g, scc_decompose(g))
    assert gbar.vertices == tuple((i, 1) for i in range(5))
    assert gbar.edges == frozenset(((a, 1), (b, 1)) for a, b in g.edges)


def test_two_cycle_augmentation():
    g = build_redemption_graph(two_firm_cycle())
    gbar = acyclic_augmentation(g, scc_decompose(g))
    assert set(gbar.vertices) == {(0, 1), (0, 2), (1, 1), (1, 2)}
    assert gbar.edges == frozenset(
        {((0, 1), (0, 2)), ((1, 1), (1, 2)), ((0, 1), (1, 2)), ((1, 1), (0, 2))}
    )


def test_cycle_with_pendants_expansion():
    n, edges = cycle_with_pendants_edges()
    _, gbar = build(n, edges)
    assert gbar.num_vertices == 4 * 4 + 5

    expected = set()
    ring = {0: 1, 1: 2, 2: 3, 3: 0}  # j -> i along the cycle (j is a parent of i)
    for i in range(4):
        for c in range(1, 4):
            expected.add(((i, c), (i, c + 1)))
    for j, i in ring.items():
        for c in range(1, 4):
            expected.add(((j, c), (i, c + 1)))
        for c in range(1, 3):
            expected.add(((j, c), (i, c + 2)))
    for c in range(1, 5):
        expected.add(((5, 1), (0, c)))  # pendant lender fans into every copy
    expected |= {((0, 4), (4, 1)), ((1, 4), (6, 1)), ((2, 4), (7, 1)), ((3, 4), (8, 1))}

    assert gbar.edges == frozenset(expected)
    assert len(gbar.edges) == 40
    assert verify_dag(gbar)


def test_parent_families_per_vertex():
    rng = np.random.default_rng(77)
    for _ in range(30):
        n = int(rng.integers(2, 12))
        edges = [(i, j) for i in range(n) for j in range(n) if i != j and rng.random() < 0.3]
        g, gbar = build(n, edges)
        scc = scc_decompose(g)
        sizes = scc.component_size_of
        for (i, c) in gbar.vertices:
            cross = {j for j in g.parents_of(i) if scc.component_of[j] != scc.component_of[i]}
            same = {j for j in g.parents_of(i) if scc.component_of[j] == scc.component_of[i]}
            want = {(j, sizes[j]) for j in cross}
            if c > 1:
                want.add((i, c - 1))
                want |= {(j, c - 1) for j in same}
            if c > 2:
                want |= {(j, c - 2) for j in same}
            assert set(gbar.parents_of((i, c))) == want


def test_fuzz_augmentation_always_acyclic():
    rng = np.random.default_rng(123)
    for _ in range(1000):
        n = int(rng.integers(2, 31))
        density = rng.uniform(0.02, 0.3)
        edges = [(i, j) for i in range(n) for j in range(n) if i != j and rng.random() < density]
        _, gbar = build(n, edges)
        assert verify_dag(gbar)
        assert witness_cycle(gbar) is None
        order = gbar.topological_order
        pos = {v: k for k, v in enumerate(order)}
        assert all(pos[a] < pos[b] for a, b in gbar.edges)


def test_hand_built_cycle_is_rejected_with_witness():
    bad = AugmentedGraph(
        vertices=((0, 1), (1, 1)),
        edges=frozenset({((0, 1), (1, 1)), ((1, 1), (0, 1))}),
        copies_per_firm=(1, 1),
    )
    assert not verify_dag(bad)
    cyc = witness_cycle(bad)
    assert cyc is not None
    assert set(cyc) == {(0, 1), (1, 1)}


def test_vertex_count_is_sum_of_component_sizes():
    n = 5
    complete = [(i, j) for i in range(n) for j in range(n) if i != j]
    _, gbar = build(n, complete)
    assert gbar.num_vertices == n * n
    rng = np.random.default_rng(9)
    for _ in range(10):
        m = int(rng.integers(2, 10))
        edges = [(i, j) for i in range(m) for j in range(m) if i != j and rng.random() < 0.4]
        g, gbar = build(m, edges)
        assert gbar.num_vertices == sum(scc_decompose(g).component_size_of)


def test_dot_output_mentions_every_vertex():
    _, gbar = build(*cycle_with_pendants_edges())
    dot = to_dot(gbar)
    assert dot.startswith("digraph")
    assert '"1.4" -> "5.1"' in dot  # 1-based firm labels
    assert dot.count("->") == len(gbar.edges)
