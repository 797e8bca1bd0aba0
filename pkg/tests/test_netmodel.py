import json

import numpy as np
import pytest

from contagionbn import (
    FinancialNetwork,
    FirmParams,
    build_redemption_graph,
    dumps_network,
    generate_core_periphery,
    is_dag,
    load_network,
    loads_network,
    redemption_graph_from_edges,
    save_network,
    scc_decompose,
    validate_network,
)
from conftest import cycle_with_pendants_edges, five_firm_dag, random_network, two_firm_cycle


def test_core_periphery_network_is_valid():
    net = generate_core_periphery(5, 19)
    assert net.num_firms == 100
    assert validate_network(net).ok


def test_mutual_ten_dollar_loans_valid():
    # no cash, no external debt: the bound 0 < 10 holds strictly
    assert validate_network(two_firm_cycle()).ok


def test_cash_bound_requires_strict_inequality():
    firm = FirmParams(1.0, 2.0, 2.0, 0.0, 0.2)
    net = FinancialNetwork([firm], np.zeros((1, 1)))
    report = validate_network(net)
    assert not report.ok
    assert [i.kind for i in report.issues] == ["cash_bound"]
    assert report.issues[0].firms == (0,)


def test_validation_collects_all_violations():
    firms = [FirmParams(-1.0, -0.5, -2.0, 0.0, 0.0), FirmParams(1.0, 0.0, 1.0, 0.0, 0.2)]
    liab = np.array([[1.0, -3.0], [2.0, 0.0]])
    report = validate_network(FinancialNetwork(firms, liab))
    kinds = {i.kind for i in report.issues}
    assert {"nonpositive_assets", "nonpositive_volatility", "negative_cash",
            "negative_external_liability", "self_loan", "negative_liability"} <= kinds


def test_edges_follow_loan_book_transpose():
    net = two_firm_cycle()
    g = build_redemption_graph(net)
    assert g.edges == frozenset({(0, 1), (1, 0)})


def test_five_firm_edges():
    g = build_redemption_graph(five_firm_dag())
    assert g.edges == frozenset({(0, 3), (0, 2), (1, 2), (2, 4), (3, 4)})


def test_no_loans_no_edges():
    firms = [FirmParams(1.0, 0.0, 1.0, 0.0, 0.2) for _ in range(3)]
    g = build_redemption_graph(FinancialNetwork(firms, np.zeros((3, 3))))
    assert g.edges == frozenset()


def test_edge_round_trip_random():
    rng = np.random.default_rng(11)
    for _ in range(25):
        net = random_network(rng, int(rng.integers(2, 9)))
        g = build_redemption_graph(net)
        for i in range(net.num_firms):
            for j in range(net.num_firms):
                assert ((i, j) in g.edges) == (net.liabilities[j, i] > 0)
                assert (i in g.parents_of(j)) == (net.liabilities[j, i] > 0)


def test_reachability_indexes_consistent():
    rng = np.random.default_rng(5)
    for _ in range(25):
        net = random_network(rng, int(rng.integers(2, 10)))
        g = build_redemption_graph(net)
        scc = scc_decompose(g)
        for v in g.vertices:
            de = g.descendants_of(v)
            assert de == frozenset(w for w in g.vertices if v in g.ancestors_of(w))
            nd = g.non_descendants_of(v)
            assert nd | {v} | de == set(g.vertices)
            assert not (nd & de) and v not in nd
            # v is its own descendant exactly when it sits on a lending cycle
            assert (v in de) == (scc.component_size_of[v] > 1)


def test_scc_cycle_with_pendants():
    n, edges = cycle_with_pendants_edges()
    scc = scc_decompose(redemption_graph_from_edges(n, edges))
    comps = {frozenset(c) for c in scc.components}
    assert frozenset({0, 1, 2, 3}) in comps
    assert sum(1 for c in scc.components if len(c) == 1) == 5
    assert [scc.component_size_of[v] for v in range(4)] == [4, 4, 4, 4]


def test_scc_two_cycle():
    g = build_redemption_graph(two_firm_cycle())
    scc = scc_decompose(g)
    assert scc.components.count(frozenset({0, 1})) == 1
    assert scc.component_size_of == (2, 2)


def test_scc_dag_all_singletons():
    g = build_redemption_graph(five_firm_dag())
    scc = scc_decompose(g)
    assert all(len(c) == 1 for c in scc.components)
    assert scc.component_size_of == (1,) * 5


def test_scc_order_respects_parents():
    rng = np.random.default_rng(21)
    for _ in range(40):
        n = int(rng.integers(2, 12))
        edges = [(i, j) for i in range(n) for j in range(n) if i != j and rng.random() < 0.3]
        g = redemption_graph_from_edges(n, edges)
        scc = scc_decompose(g)
        for p, c in g.edges:
            assert scc.component_of[p] <= scc.component_of[c]
        # partition check
        assert sorted(v for comp in scc.components for v in comp) == list(range(n))


def test_is_dag():
    assert not is_dag(build_redemption_graph(two_firm_cycle()))
    assert is_dag(build_redemption_graph(five_firm_dag()))
    assert is_dag(redemption_graph_from_edges(3, []))


def test_is_dag_iff_unit_components():
    rng = np.random.default_rng(3)
    for _ in range(30):
        n = int(rng.integers(2, 10))
        edges = [(i, j) for i in range(n) for j in range(n) if i != j and rng.random() < 0.25]
        g = redemption_graph_from_edges(n, edges)
        assert is_dag(g) == (max(scc_decompose(g).component_size_of) == 1)


def test_json_round_trip_is_byte_identical(tmp_path):
    rng = np.random.default_rng(17)
    net = random_network(rng, 6)
    text = dumps_network(net)
    assert dumps_network(loads_network(text)) == text
    path = tmp_path / "net.json"
    save_network(net, path)
    assert dumps_network(load_network(path)) == path.read_text(encoding="utf-8")


def test_json_schema_fields():
    doc = json.loads(dumps_network(two_firm_cycle()))
    assert set(doc) == {"firms", "loans", "r0", "r0_ext", "horizon"}
    assert doc["loans"] == [
        {"lender": 0, "borrower": 1, "amount": 10.0, "rate": 0.0},
        {"lender": 1, "borrower": 0, "amount": 10.0, "rate": 0.0},
    ]
    assert set(doc["firms"][0]) == {"x0", "k0", "f", "mu", "sigma"}


def test_generate_core_periphery_shapes():
    net = generate_core_periphery(5, 19)
    g = build_redemption_graph(net)
    scc = scc_decompose(g)
    assert max(len(c) for c in scc.components) == 5
    assert sum(1 for i in range(net.num_firms) if not g.children_of(i)) == 95
    single = generate_core_periphery(1, 0)
    assert single.num_firms == 1
    assert build_redemption_graph(single).edges == frozenset()
    assert validate_network(single).ok
