"""Shared fixtures: hand-built reference networks and random generators."""

from __future__ import annotations

import numpy as np
import pytest

from contagionbn import FinancialNetwork, FirmParams, build_redemption_graph, scc_decompose
from contagionbn.cascade import mild_defaults_batch, sample_terminal_assets, strict_defaults_batch


def two_firm_cycle(x0: float = 5.0, loan: float = 10.0, mu: float = 0.05, sigma: float = 0.3) -> FinancialNetwork:
    """Two firms owing each other ``loan`` with no cash or external debt."""
    firms = [FirmParams(x0, 0.0, 0.0, mu, sigma) for _ in range(2)]
    liab = np.array([[0.0, loan], [loan, 0.0]])
    return FinancialNetwork(firms, liab)


def five_firm_dag() -> FinancialNetwork:
    """Five-firm acyclic network: 4 and 3 lend to 1, 3 lends to 2, 5 lends to 3 and 4.

    Firms 1 and 2 almost surely survive; without their repayments firms 3
    and 4 almost surely fail, which firm 5's fate then follows.
    """
    firms = [
        FirmParams(15.0, 0.0, 0.0, 2.0, 0.3),
        FirmParams(15.0, 0.0, 0.0, 2.0, 0.3),
        FirmParams(1.0, 0.0, 0.0, -3.0, 0.1),
        FirmParams(1.0, 0.0, 0.0, -3.0, 0.1),
        FirmParams(1.0, 0.0, 1.0, 0.0, 0.1),
    ]
    liab = np.zeros((5, 5))
    liab[3, 0] = 20.0
    liab[2, 0] = 10.0
    liab[2, 1] = 10.0
    liab[4, 2] = 15.0
    liab[4, 3] = 15.0
    return FinancialNetwork(firms, liab)


def cycle_with_pendants_edges() -> tuple[int, list[tuple[int, int]]]:
    """A 4-cycle 0->1->2->3->0 with five pendant vertices."""
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (5, 0), (1, 6), (2, 7), (3, 8)]
    return 9, edges


def random_network(
    rng: np.random.Generator,
    n: int,
    edge_prob: float = 0.3,
    dag: bool = False,
    max_copies: int | None = None,
) -> FinancialNetwork:
    """Random valid network with default probabilities away from 0 and 1.

    With ``dag`` the loan book is upper triangular, which makes the
    redemption graph acyclic.  ``max_copies`` caps the total vertex count of
    the augmentation (resampling the loan book until it fits).
    """
    for _ in range(200):
        liab = np.zeros((n, n))
        rates = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                if dag and i > j:
                    continue
                if rng.random() < edge_prob:
                    liab[i, j] = rng.uniform(0.5, 2.0)
                    rates[i, j] = rng.uniform(-0.05, 0.1)
        r0 = rng.uniform(-0.02, 0.05)
        r0_ext = rng.uniform(-0.02, 0.05)
        horizon = float(rng.choice([0.5, 1.0, 2.0]))
        k0 = rng.uniform(0.0, 0.3, size=n)
        f_ext = k0 * np.exp(-(r0_ext - r0) * horizon) + rng.uniform(0.1, 1.0, size=n)
        mu = rng.uniform(-0.3, 0.3, size=n)
        sigma = rng.uniform(0.1, 0.8, size=n)
        growth = np.exp(rates * horizon)
        owed = np.exp(r0_ext * horizon) * f_ext + (growth * liab).sum(axis=0) - np.exp(r0 * horizon) * k0
        x0 = rng.uniform(0.4, 1.8, size=n) * owed * np.exp(-mu * horizon)
        firms = [FirmParams(x0[i], k0[i], f_ext[i], mu[i], sigma[i]) for i in range(n)]
        net = FinancialNetwork(firms, liab, rates, r0, r0_ext, horizon)
        if max_copies is not None:
            scc = scc_decompose(build_redemption_graph(net))
            if sum(scc.component_size_of) > max_copies:
                continue
        return net
    raise RuntimeError("could not sample a network within the copy budget")


def mc_default_law(net: FinancialNetwork, rule: str, samples: int, seed: int) -> np.ndarray:
    """Scenario frequencies of every default configuration, shape (2,)*n."""
    n = net.num_firms
    batch = mild_defaults_batch if rule in ("mild", "dag") else strict_defaults_batch
    weights = 1 << np.arange(n)[::-1]  # firm 0 is the most significant bit
    counts = np.zeros(1 << n)
    done = 0
    block = 1 << 19
    rng_stream = np.random.SeedSequence(seed).spawn((samples + block - 1) // block)
    for child in rng_stream:
        m = min(block, samples - done)
        rng = np.random.Generator(np.random.PCG64(child))
        z = rng.standard_normal((m, n))
        t = net.horizon
        x = net.x0 * np.exp((net.mu - 0.5 * net.sigma**2) * t + net.sigma * np.sqrt(t) * z)
        d = batch(net, x)
        counts += np.bincount(d @ weights, minlength=1 << n)
        done += m
    return (counts / samples).reshape((2,) * n)


@pytest.fixture
def study_net():
    from contagionbn import generate_core_periphery

    return generate_core_periphery(5, 19)
