import numpy as np
import pytest

from contagionbn import (
    FinancialNetwork,
    FirmParams,
    check_consistent,
    equity,
    mild_cascade,
    sample_assets,
    strict_cascade,
)
from contagionbn.cascade import (
    AssetScenario,
    equities,
    mild_defaults_batch,
    sample_terminal_assets,
    strict_defaults_batch,
)
from conftest import five_firm_dag, random_network, two_firm_cycle


def scenario_with_assets(net, x):
    return AssetScenario(terminal_assets=np.asarray(x, dtype=float), normal_draws=np.zeros(net.num_firms), seed=-1)


def naive_mild_rounds(net, x):
    """Literal round-by-round evaluation, plain Python arithmetic."""
    t = net.horizon
    n = net.num_firms
    defaulted: set[int] = set()
    rounds = {}
    for sweep in range(1, n + 2):
        fresh = []
        for i in range(n):
            if i in defaulted:
                continue
            e = x[i] + np.exp(net.riskless_rate * t) * net.firms[i].cash_0
            e -= np.exp(net.external_rate * t) * net.firms[i].external_liability
            for j in range(n):
                if j not in defaulted:
                    e += np.exp(net.loan_rates[i, j] * t) * net.liabilities[i, j]
                e -= np.exp(net.loan_rates[j, i] * t) * net.liabilities[j, i]
            if e < 0:
                fresh.append(i)
        if not fresh:
            break
        for i in fresh:
            defaulted.add(i)
            rounds[i] = sweep
    return defaulted, rounds


def naive_strict_rounds(net, x):
    t = net.horizon
    n = net.num_firms
    safe: set[int] = set()
    rounds = {}
    for sweep in range(1, n + 2):
        fresh = []
        for i in range(n):
            if i in safe:
                continue
            e = x[i] + np.exp(net.riskless_rate * t) * net.firms[i].cash_0
            e -= np.exp(net.external_rate * t) * net.firms[i].external_liability
            for j in range(n):
                if j in safe:
                    e += np.exp(net.loan_rates[i, j] * t) * net.liabilities[i, j]
                e -= np.exp(net.loan_rates[j, i] * t) * net.liabilities[j, i]
            if e >= 0:
                fresh.append(i)
        if not fresh:
            break
        for i in fresh:
            safe.add(i)
            rounds[i] = sweep
    return safe, rounds


def test_sigma_zero_limit():
    firms = [FirmParams(3.0, 0.0, 1.0, 0.07, 1e-12)]
    net = FinancialNetwork(firms, np.zeros((1, 1)), horizon=1.0)
    s = sample_assets(net, 123)
    assert s.terminal_assets[0] == pytest.approx(3.0 * np.exp(0.07), rel=1e-6)


def test_fixed_seed_is_bit_identical():
    net = two_firm_cycle()
    a = sample_assets(net, 42)
    b = sample_assets(net, 42)
    assert np.array_equal(a.terminal_assets, b.terminal_assets)
    assert np.array_equal(a.normal_draws, b.normal_draws)
    c = sample_assets(net, 43)
    assert not np.array_equal(a.terminal_assets, c.terminal_assets)


def test_terminal_asset_mean_matches_lognormal_moment():
    firms = [FirmParams(1.0, 0.0, 1.0, 0.12, 0.4)]
    net = FinancialNetwork(firms, np.zeros((1, 1)), horizon=1.0)
    x = sample_terminal_assets(net, 7, 1_000_000)[:, 0]
    target = np.exp(0.12)
    se = x.std(ddof=1) / np.sqrt(x.size)
    assert abs(x.mean() - target) < 3 * se


def test_equity_two_firm_examples():
    net = two_firm_cycle()
    s = scenario_with_assets(net, [5.0, 5.0])
    assert equity(net, s, {0, 1}, 0) == pytest.approx(5.0)
    assert equity(net, s, {0, 1}, 1) == pytest.approx(5.0)
    assert equity(net, s, set(), 0) == pytest.approx(-5.0)
    assert equity(net, s, set(), 1) == pytest.approx(-5.0)


def test_equity_without_loans_is_terminal_assets():
    firms = [FirmParams(2.0, 0.0, 1.0, 0.0, 0.2) for _ in range(3)]
    net = FinancialNetwork(firms, np.zeros((3, 3)))
    s = scenario_with_assets(net, [1.5, 2.5, 0.5])
    for i, want in enumerate([1.5, 2.5, 0.5]):
        assert equity(net, s, set(), i) == pytest.approx(want - 1.0)


def test_mild_rule_allows_netting():
    net = two_firm_cycle()
    out = mild_cascade(net, scenario_with_assets(net, [5.0, 5.0]))
    assert not out.defaults.any()
    assert out.round_of == (None, None)
    assert np.allclose(out.equities, [5.0, 5.0])


def test_strict_rule_forbids_netting():
    net = two_firm_cycle()
    out = strict_cascade(net, scenario_with_assets(net, [5.0, 5.0]))
    assert out.defaults.all()
    assert np.allclose(out.equities, [-5.0, -5.0])


def test_first_round_default_when_insolvent_despite_full_repayment():
    firms = [FirmParams(1.0, 0.0, 5.0, 0.0, 0.2), FirmParams(9.0, 0.0, 1.0, 0.0, 0.2)]
    liab = np.zeros((2, 2))
    liab[0, 1] = 2.0  # firm 0 lent 2 to firm 1
    net = FinancialNetwork(firms, liab)
    out = mild_cascade(net, scenario_with_assets(net, [1.0, 9.0]))
    # 1 + 2 - 5 < 0 even with repayment
    assert out.defaults[0] and not out.defaults[1]
    assert out.round_of[0] == 1


def test_first_round_survival_without_any_repayment():
    firms = [FirmParams(10.0, 0.0, 5.0, 0.0, 0.2), FirmParams(1.0, 0.0, 1.0, 0.0, 0.2)]
    liab = np.zeros((2, 2))
    liab[0, 1] = 2.0
    net = FinancialNetwork(firms, liab)
    out = strict_cascade(net, scenario_with_assets(net, [10.0, 1.0]))
    assert not out.defaults[0]
    assert out.round_of[0] == 1


def test_three_round_cascade_on_five_firm_network():
    net = five_firm_dag()
    # firm 0 fails alone among the two top lenders; 2 and 3 follow, then 4
    out = mild_cascade(net, scenario_with_assets(net, [5.0, 30.0, 1.0, 1.0, 0.5]))
    assert out.default_set() == {0, 2, 3, 4}
    assert out.round_of[0] == 1
    assert out.round_of[2] == 2
    assert out.round_of[3] == 2
    assert out.round_of[4] == 3
    assert out.round_of[1] is None


def test_vectorized_rules_match_naive_definition():
    rng = np.random.default_rng(2)
    for _ in range(10):
        net = random_network(rng, int(rng.integers(2, 8)))
        x = sample_terminal_assets(net, int(rng.integers(1000)), 50)
        dm = mild_defaults_batch(net, x)
        ds = strict_defaults_batch(net, x)
        for k in range(x.shape[0]):
            want_d, rounds_d = naive_mild_rounds(net, x[k])
            want_s, rounds_s = naive_strict_rounds(net, x[k])
            assert set(np.nonzero(dm[k])[0]) == want_d
            assert set(np.nonzero(~ds[k])[0]) == want_s
        # spot-check round indices on the scenario level
        scen = sample_assets(net, 99)
        out = mild_cascade(net, scen)
        want_d, rounds_d = naive_mild_rounds(net, scen.terminal_assets)
        assert out.default_set() == want_d
        assert {i: out.round_of[i] for i in want_d} == rounds_d


def test_strict_survivors_subset_of_mild():
    rng = np.random.default_rng(8)
    for _ in range(5):
        net = random_network(rng, 6, edge_prob=0.4)
        x = sample_terminal_assets(net, int(rng.integers(1000)), 10_000)
        dm = mild_defaults_batch(net, x)
        ds = strict_defaults_batch(net, x)
        assert np.all(dm <= ds), "mild default set must be contained in the strict one"


def test_dag_rules_agree_scenario_wise():
    rng = np.random.default_rng(13)
    for _ in range(5):
        net = random_network(rng, 7, edge_prob=0.35, dag=True)
        x = sample_terminal_assets(net, int(rng.integers(1000)), 10_000)
        assert np.array_equal(mild_defaults_batch(net, x), strict_defaults_batch(net, x))


def test_cycle_rules_disagree_on_witness():
    net = two_firm_cycle()
    s = scenario_with_assets(net, [5.0, 5.0])
    assert mild_cascade(net, s).default_set() == set()
    assert strict_cascade(net, s).default_set() == {0, 1}


def test_check_consistent_accepts_both_fixed_points():
    net = two_firm_cycle()
    s = scenario_with_assets(net, [5.0, 5.0])
    all_survive = mild_cascade(net, s)
    all_fail = strict_cascade(net, s)
    assert check_consistent(net, s, all_survive)
    assert check_consistent(net, s, all_fail)


def test_check_consistent_rejects_mixed_assignment():
    net = two_firm_cycle()
    s = scenario_with_assets(net, [5.0, 5.0])
    bogus = type(mild_cascade(net, s))(
        defaults=np.array([True, False]),
        round_of=(1, None),
        equities=np.array([0.0, 0.0]),
        rule="mild",
    )
    assert not check_consistent(net, s, bogus)


def test_cascade_outputs_always_consistent():
    rng = np.random.default_rng(31)
    for _ in range(8):
        net = random_network(rng, int(rng.integers(2, 8)), edge_prob=0.4)
        for seed in rng.integers(0, 10_000, size=8):
            s = sample_assets(net, int(seed))
            assert check_consistent(net, s, mild_cascade(net, s))
            assert check_consistent(net, s, strict_cascade(net, s))


def test_rounds_cover_exactly_the_resolved_side():
    rng = np.random.default_rng(41)
    net = random_network(rng, 6, edge_prob=0.5)
    for seed in range(20):
        s = sample_assets(net, seed)
        m = mild_cascade(net, s)
        for i in range(net.num_firms):
            assert (m.round_of[i] is not None) == bool(m.defaults[i])
        st = strict_cascade(net, s)
        for i in range(net.num_firms):
            assert (st.round_of[i] is not None) == (not st.defaults[i])
