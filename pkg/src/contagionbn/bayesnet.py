"""Compilation of the default indicators into a discrete Bayesian network.

The terminal assets are lognormal, so the probability that firm i fails
given that exactly the firms in a set sigma repay it has a closed form:

    phi(i, sigma) = Phi( -(log(x0_i / d) + (mu_i - sigma_i^2/2) T)
                          / (sigma_i sqrt(T)) ),
    d = e^{r0_ext T} f_i + sum_j e^{r_ji T} L_ji - e^{r0 T} k0_i
        - sum_{j in sigma} e^{r_ij T} L_ij,

with Phi the standard normal distribution function and phi := 0 whenever
d <= 0 (the firm cannot fail once the claims it collects cover its debt).

On a DAG each firm carries one binary default variable whose conditional
law given its debtors is phi directly.  With cycles, the variables live on
the acyclic augmentation: under the mild rule, copy (i, n) is the indicator
that firm i has failed by round n of the netting cascade, and conditional
probabilities are increments of phi normalized by the survival of round
n-1.  Under the strict rule copies carry survival indicators and the
conditional failure probability is a ratio of phi values.  Degenerate
branches (already failed / already safe) are exact 0 or 1, and rows whose
conditioning event has probability zero are clamped into [0, 1]; any choice
there leaves the joint law unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np
from scipy.special import ndtr

from .augment import AugmentedGraph, AugVertex, acyclic_augmentation
from .netmodel import (
    FinancialNetwork,
    RedemptionGraph,
    SccDecomposition,
    build_redemption_graph,
    is_dag,
    scc_decompose,
)

__all__ = [
    "Cpt",
    "CptEntry",
    "DiscreteBayesNet",
    "ConfigProbability",
    "default_phi",
    "build_dag_bn",
    "build_mild_bn",
    "build_strict_bn",
    "joint_config_prob",
    "bn_to_dict",
]

MAX_PARENTS = 25  # dense tables; 2^25 rows is the memory guard


def default_phi(net: FinancialNetwork, i: int, paying_parents: Iterable[int], horizon: float | None = None) -> float:
    """Probability that firm i fails when exactly ``paying_parents`` repay it.

    Firms outside i's debtor set contribute nothing (their claims are zero).
    Returns 0 when the collected claims already cover the debt net of cash.
    """
    t = net.horizon if horizon is None else float(horizon)
    d = net.debt_at_maturity[i] - net.cash_at_maturity[i]
    for j in paying_parents:
        d -= net.maturity_claims[i, j]
    if d <= 0.0:
        return 0.0
    z = -(math.log(net.x0[i]) - math.log(d) + (net.mu[i] - 0.5 * net.sigma[i] ** 2) * t) / (
        net.sigma[i] * math.sqrt(t)
    )
    return float(ndtr(z))


@dataclass(frozen=True)
class CptEntry:
    variable: AugVertex
    parent_assignment: tuple[int, ...]
    default_probability: float


@dataclass(frozen=True)
class Cpt:
    """Dense conditional table for one vertex.

    ``table[k]`` is P[variable = 1 | parents], with the assignment encoded
    little-endian: bit b of k is the value of ``parents[b]``.  Variable
    semantics (default vs survival indicator) belong to the enclosing net.
    """

    vertex: AugVertex
    parents: tuple[AugVertex, ...]
    table: np.ndarray

    def prob_one(self, parent_values: Mapping[AugVertex, int]) -> float:
        k = 0
        for b, p in enumerate(self.parents):
            k |= (parent_values[p] & 1) << b
        return float(self.table[k])


@dataclass(frozen=True)
class DiscreteBayesNet:
    """Binary-variable Bayesian network over the (augmented) redemption graph.

    ``rule`` is one of "dag", "mild", "strict".  Variables carry default
    indicators for "dag"/"mild" and survival indicators for "strict"; the
    value representing default is ``default_value``.  Firm i's terminal
    status is the final copy (i, N_i).
    """

    graph: AugmentedGraph
    rule: str
    cpts: tuple[Cpt, ...]
    net: FinancialNetwork = field(compare=False, repr=False, default=None)
    redemption: RedemptionGraph = field(compare=False, repr=False, default=None)
    scc: SccDecomposition = field(compare=False, repr=False, default=None)

    @property
    def default_value(self) -> int:
        return 0 if self.rule == "strict" else 1

    def cpt_of(self, v: AugVertex) -> Cpt:
        return self.cpts[self.graph.vertex_id(v)]

    def final_vertex(self, firm: int) -> AugVertex:
        return self.graph.final_vertex(firm)

    @property
    def num_firms(self) -> int:
        return len(self.graph.copies_per_firm)

    def entries(self) -> Iterator[CptEntry]:
        for cpt in self.cpts:
            for k in range(cpt.table.shape[0]):
                assignment = tuple((k >> b) & 1 for b in range(len(cpt.parents)))
                p_one = float(cpt.table[k])
                p_default = p_one if self.default_value == 1 else 1.0 - p_one
                yield CptEntry(cpt.vertex, assignment, p_default)


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


def _build(net: FinancialNetwork, g: RedemptionGraph, scc: SccDecomposition, rule: str) -> DiscreteBayesNet:
    graph = acyclic_augmentation(g, scc)
    comp = scc.component_of
    phi_cache: dict[tuple[int, frozenset[int]], float] = {}

    def phi(i: int, paying: frozenset[int]) -> float:
        key = (i, paying)
        if key not in phi_cache:
            phi_cache[key] = default_phi(net, i, paying)
        return phi_cache[key]

    cpts: list[Cpt] = []
    for v in graph.vertices:
        firm, copy = v
        parents = graph.parents_of(v)
        if len(parents) > MAX_PARENTS:
            raise ValueError(
                f"vertex {v} has {len(parents)} parents; dense tables support at most {MAX_PARENTS}"
            )
        cross = [p for p in parents if p[0] != firm and comp[p[0]] != comp[firm]]
        own_prev = (firm, copy - 1) if copy > 1 else None
        same_prev = [p for p in parents if p[0] != firm and comp[p[0]] == comp[firm] and p[1] == copy - 1]
        same_prev2 = [p for p in parents if p[0] != firm and comp[p[0]] == comp[firm] and p[1] == copy - 2]
        same_parent_firms = sorted(
            j for j in g.parents_of(firm) if comp[j] == comp[firm]
        )

        size = 1 << len(parents)
        table = np.empty(size)
        pos = {p: b for b, p in enumerate(parents)}
        for k in range(size):
            val = {p: (k >> b) & 1 for p, b in pos.items()}
            if rule == "strict":
                # paying = survivors among debtors; round-0 copies never pay
                paying_now = frozenset(
                    {p[0] for p in cross if val[p] == 1}
                    | {p[0] for p in same_prev if val[p] == 1}
                )
                if copy == 1:
                    fail = phi(firm, paying_now)
                elif val[own_prev] == 1:
                    fail = 0.0
                else:
                    paying_before = frozenset(
                        {p[0] for p in cross if val[p] == 1}
                        | {p[0] for p in same_prev2 if val[p] == 1}
                    )
                    den = phi(firm, paying_before)
                    fail = 0.0 if den <= 0.0 else _clamp01(phi(firm, paying_now) / den)
                table[k] = 1.0 - fail  # variable is the survival indicator
            else:
                # paying = debtors not (yet) in default; same-component
                # debtors with no round variable yet count as paying
                cross_paying = {p[0] for p in cross if val[p] == 0}
                if copy == 1:
                    paying_now = frozenset(cross_paying | set(same_parent_firms))
                    table[k] = phi(firm, paying_now)
                    continue
                if val[own_prev] == 1:
                    table[k] = 1.0
                    continue
                paying_now = frozenset(cross_paying | {p[0] for p in same_prev if val[p] == 0})
                if copy == 2:
                    paying_before = frozenset(cross_paying | set(same_parent_firms))
                else:
                    paying_before = frozenset(cross_paying | {p[0] for p in same_prev2 if val[p] == 0})
                p_now = phi(firm, paying_now)
                p_before = phi(firm, paying_before)
                den = 1.0 - p_before
                table[k] = 1.0 if den <= 0.0 else _clamp01((p_now - p_before) / den)
        table.setflags(write=False)
        cpts.append(Cpt(v, parents, table))

    return DiscreteBayesNet(graph=graph, rule=rule, cpts=tuple(cpts), net=net, redemption=g, scc=scc)


def build_mild_bn(net: FinancialNetwork, g: RedemptionGraph | None = None, scc: SccDecomposition | None = None) -> DiscreteBayesNet:
    """Round-indexed default indicators on the augmentation, mild rule."""
    g = build_redemption_graph(net) if g is None else g
    scc = scc_decompose(g) if scc is None else scc
    return _build(net, g, scc, "mild")


def build_strict_bn(net: FinancialNetwork, g: RedemptionGraph | None = None, scc: SccDecomposition | None = None) -> DiscreteBayesNet:
    """Round-indexed survival indicators on the augmentation, strict rule."""
    g = build_redemption_graph(net) if g is None else g
    scc = scc_decompose(g) if scc is None else scc
    return _build(net, g, scc, "strict")


def build_dag_bn(net: FinancialNetwork, g: RedemptionGraph | None = None) -> DiscreteBayesNet:
    """One default variable per firm; only valid on acyclic redemption graphs."""
    g = build_redemption_graph(net) if g is None else g
    if not is_dag(g):
        raise ValueError("redemption graph has a lending cycle; use the mild or strict builder")
    return _build(net, g, scc_decompose(g), "dag")


@dataclass(frozen=True)
class ConfigProbability:
    probability: float
    exact: bool


def joint_config_prob(
    net: FinancialNetwork,
    g: RedemptionGraph,
    survivors: Iterable[int],
    rule: str | None = None,
) -> ConfigProbability:
    """Product-form probability that exactly ``survivors`` survive.

    The value is  prod_{i not in S} phi(i, S) * prod_{i in S} (1 - phi(i, S)).
    It equals the actual configuration probability whenever the relevant
    induced subgraphs are acyclic: both sides for an unspecified rule, the
    default side for the mild rule, the survivor side for the strict rule.
    Otherwise the product is only an upper bound and ``exact`` is False.
    """
    s = frozenset(int(v) for v in survivors)
    prob = 1.0
    for i in range(net.num_firms):
        p = default_phi(net, i, s)
        prob *= (1.0 - p) if i in s else p
    defaulted = frozenset(range(net.num_firms)) - s
    if rule == "mild":
        exact = _induced_acyclic(g, defaulted)
    elif rule == "strict":
        exact = _induced_acyclic(g, s)
    else:
        exact = _induced_acyclic(g, s) and _induced_acyclic(g, defaulted)
    return ConfigProbability(probability=prob, exact=exact)


def _induced_acyclic(g: RedemptionGraph, keep: frozenset[int]) -> bool:
    from .netmodel import _tarjan_components

    idx = {v: k for k, v in enumerate(sorted(keep))}
    children = [[idx[w] for w in g.children_of(v) if w in keep] for v in sorted(keep)]
    return all(len(c) == 1 for c in _tarjan_components(len(idx), children))


def bn_to_dict(bn: DiscreteBayesNet) -> dict:
    """JSON-ready view: vertices, edges, and conditional tables."""
    return {
        "rule": bn.rule,
        "default_value": bn.default_value,
        "vertices": [list(v) for v in bn.graph.vertices],
        "edges": sorted([list(a), list(b)] for a, b in bn.graph.edges),
        "cpts": [
            {
                "vertex": list(c.vertex),
                "parents": [list(p) for p in c.parents],
                "prob_one": [float(x) for x in c.table],
            }
            for c in bn.cpts
        ],
    }
