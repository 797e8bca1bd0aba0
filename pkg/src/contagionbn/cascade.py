"""Scenario sampling and resolution of the default fixed point.

A scenario is a draw of terminal operating assets.  Equity of firm i given a
set S of surviving firms is

    E_i = X_i(T) + sum_{j in S} e^{r_ij T} L_ij + e^{r0 T} k0_i
          - e^{r0_ext T} f_i - sum_j e^{r_ji T} L_ji,

and a consistent outcome marks exactly the firms with E_i < 0 as defaulted
(zero recovery: a defaulted debtor pays nothing).  On graphs with lending
cycles the fixed point need not be unique; the two extremal solutions are
produced by iterative rounds:

* mild rule: start from the firms that fail even when everyone pays, then
  keep removing payments of firms already failed (maximal survivor set);
* strict rule: start from the firms that survive even when nobody pays,
  then keep adding payments of firms already safe (minimal survivor set).

Sampling uses numpy's default PCG64 bit generator; standard normals come
from ``Generator.standard_normal`` (ziggurat).  All outputs are pure
functions of (network, seed).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .netmodel import FinancialNetwork

__all__ = [
    "AssetScenario",
    "CascadeOutcome",
    "sample_assets",
    "sample_terminal_assets",
    "equity",
    "equities",
    "mild_cascade",
    "strict_cascade",
    "mild_defaults_batch",
    "strict_defaults_batch",
    "check_consistent",
]

MILD = "mild"
STRICT = "strict"


@dataclass(frozen=True)
class AssetScenario:
    """One realization of the terminal operating assets X_i(T)."""

    terminal_assets: np.ndarray
    normal_draws: np.ndarray
    seed: int


@dataclass(frozen=True)
class CascadeOutcome:
    """Resolved default pattern for one scenario.

    ``round_of[i]`` is the 1-based round in which firm i defaulted (mild
    rule) or was recognized as surviving (strict rule); ``None`` for firms
    on the other side.
    """

    defaults: np.ndarray
    round_of: tuple[int | None, ...]
    equities: np.ndarray
    rule: str

    @property
    def survivors(self) -> np.ndarray:
        return ~self.defaults

    def default_set(self) -> frozenset[int]:
        return frozenset(int(i) for i in np.nonzero(self.defaults)[0])


def _terminal(net: FinancialNetwork, z: np.ndarray) -> np.ndarray:
    t = net.horizon
    return net.x0 * np.exp((net.mu - 0.5 * net.sigma**2) * t + net.sigma * np.sqrt(t) * z)


def sample_assets(net: FinancialNetwork, seed: int) -> AssetScenario:
    """Draw one scenario; bit-identical for equal (net, seed)."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(net.num_firms)
    return AssetScenario(terminal_assets=_terminal(net, z), normal_draws=z, seed=int(seed))


def sample_terminal_assets(net: FinancialNetwork, seed: int, size: int) -> np.ndarray:
    """(size, n) matrix of independent scenarios from a single seed."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((size, net.num_firms))
    return _terminal(net, z)


def equities(net: FinancialNetwork, terminal_assets: np.ndarray, survivor_mask: np.ndarray) -> np.ndarray:
    """Equity vector (or batch of vectors) for a given survivor indicator."""
    received = survivor_mask.astype(float) @ net.maturity_claims.T
    return terminal_assets + received + net.cash_at_maturity - net.debt_at_maturity


def equity(net: FinancialNetwork, scenario: AssetScenario, survivor_set: Iterable[int], i: int) -> float:
    mask = np.zeros(net.num_firms, dtype=bool)
    mask[list(survivor_set)] = True
    return float(equities(net, scenario.terminal_assets, mask)[i])


def _mild_sweeps(net: FinancialNetwork, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized mild-rule fixed point over a (m, n) batch of scenarios.

    Returns (defaults, round) where round[s, i] is the sweep at which firm i
    flipped, 0 for survivors.  Defaults grow monotonically across sweeps, so
    each sweep recomputes equities assuming payment from every firm not yet
    failed.
    """
    m, n = x.shape
    defaults = np.zeros((m, n), dtype=bool)
    rounds = np.zeros((m, n), dtype=np.int32)
    for sweep in range(1, n + 2):
        e = equities(net, x, ~defaults)
        new_defaults = e < 0.0
        fresh = new_defaults & ~defaults
        if not fresh.any():
            break
        rounds[fresh] = sweep
        defaults = new_defaults
    return defaults, rounds


def _strict_sweeps(net: FinancialNetwork, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized strict-rule fixed point; round tracks survivor recognition."""
    m, n = x.shape
    survivors = np.zeros((m, n), dtype=bool)
    rounds = np.zeros((m, n), dtype=np.int32)
    for sweep in range(1, n + 2):
        e = equities(net, x, survivors)
        new_survivors = e >= 0.0
        fresh = new_survivors & ~survivors
        if not fresh.any():
            break
        rounds[fresh] = sweep
        survivors = new_survivors
    return ~survivors, rounds


def mild_cascade(net: FinancialNetwork, scenario: AssetScenario) -> CascadeOutcome:
    """Maximal-survivor solution: netting between distressed firms allowed."""
    defaults, rounds = _mild_sweeps(net, scenario.terminal_assets[None, :])
    d = defaults[0]
    r = rounds[0]
    return CascadeOutcome(
        defaults=_ro(d),
        round_of=tuple(int(r[i]) if d[i] else None for i in range(net.num_firms)),
        equities=_ro(equities(net, scenario.terminal_assets, ~d)),
        rule=MILD,
    )


def strict_cascade(net: FinancialNetwork, scenario: AssetScenario) -> CascadeOutcome:
    """Minimal-survivor solution: no netting between distressed firms."""
    defaults, rounds = _strict_sweeps(net, scenario.terminal_assets[None, :])
    d = defaults[0]
    r = rounds[0]
    return CascadeOutcome(
        defaults=_ro(d),
        round_of=tuple(int(r[i]) if not d[i] else None for i in range(net.num_firms)),
        equities=_ro(equities(net, scenario.terminal_assets, ~d)),
        rule=STRICT,
    )


def mild_defaults_batch(net: FinancialNetwork, terminal_assets: np.ndarray) -> np.ndarray:
    """Default indicator matrix under the mild rule, one row per scenario."""
    return _mild_sweeps(net, terminal_assets)[0]


def strict_defaults_batch(net: FinancialNetwork, terminal_assets: np.ndarray) -> np.ndarray:
    return _strict_sweeps(net, terminal_assets)[0]


def check_consistent(net: FinancialNetwork, scenario: AssetScenario, outcome: CascadeOutcome) -> bool:
    """True when the outcome solves the fixed point it claims to solve.

    Recomputes equities from the outcome's survivor set; the sign pattern
    (negative exactly on the default set) must reproduce the default vector.
    Survival is the weak side: equity exactly 0 counts as surviving.
    """
    e = equities(net, scenario.terminal_assets, outcome.survivors)
    return bool(np.array_equal(e < 0.0, outcome.defaults))


def _ro(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a
