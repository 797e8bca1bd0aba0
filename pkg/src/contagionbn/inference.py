"""Probability queries on the compiled network.

Exact answers come from factor-based variable elimination with a min-fill
ordering and barren-node pruning (variables that are not targets, evidence,
or ancestors thereof never influence the answer and are dropped up front).
Every query also has a Monte-Carlo route through the cascade simulator,
which serves as an independent cross-check of the compilation.

The default-count distribution exploits the creditor structure: firms that
nobody borrowed from (sinks) are conditionally independent given the
terminal status of the remaining firms, so their count contribution is a
mixture of Bernoulli convolutions over the exact joint law of the non-sink
firms.  This keeps the bundled 100-bank case study exact.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .bayesnet import Cpt, DiscreteBayesNet
from .cascade import mild_defaults_batch, strict_defaults_batch
from .netmodel import FinancialNetwork

__all__ = [
    "Factor",
    "Query",
    "CountDistribution",
    "ZeroEvidenceError",
    "factor_product",
    "marginalize",
    "reduce_evidence",
    "query_prob",
    "joint_default_law",
    "count_distribution",
    "core_count_distribution",
    "mc_estimate",
    "brute_force_default_law",
]

MC_BATCH = 1 << 19  # scenarios per Monte-Carlo batch; fixed so results do not depend on thread count


class ZeroEvidenceError(ValueError):
    """Conditioning event has probability zero (or no accepted samples)."""


@dataclass(frozen=True)
class Factor:
    """Nonnegative table over binary variables, axes in sorted scope order."""

    scope: tuple[Hashable, ...]
    table: np.ndarray

    def __post_init__(self):
        if len(set(self.scope)) != len(self.scope):
            raise ValueError("duplicate variables in scope")
        if self.table.shape != (2,) * len(self.scope):
            raise ValueError(f"table shape {self.table.shape} does not match scope {self.scope}")
        order = sorted(range(len(self.scope)), key=lambda k: self.scope[k])
        if order != list(range(len(self.scope))):
            object.__setattr__(self, "scope", tuple(self.scope[k] for k in order))
            object.__setattr__(self, "table", np.ascontiguousarray(self.table.transpose(order)))

    @property
    def flat(self) -> np.ndarray:
        return self.table.reshape(-1)


def factor_product(f1: Factor, f2: Factor) -> Factor:
    scope = tuple(sorted(set(f1.scope) | set(f2.scope)))
    t1 = _expand(f1, scope)
    t2 = _expand(f2, scope)
    return Factor(scope, t1 * t2)


def _expand(f: Factor, scope: tuple[Hashable, ...]) -> np.ndarray:
    shape = tuple(2 if v in f.scope else 1 for v in scope)
    return f.table.reshape(shape)


def marginalize(f: Factor, v: Hashable) -> Factor:
    if v not in f.scope:
        raise ValueError(f"{v!r} not in scope")
    ax = f.scope.index(v)
    return Factor(tuple(x for x in f.scope if x != v), f.table.sum(axis=ax))


def reduce_evidence(f: Factor, assignment: Mapping[Hashable, int]) -> Factor:
    idx: list = [slice(None)] * len(f.scope)
    kept = []
    for k, v in enumerate(f.scope):
        if v in assignment:
            idx[k] = int(assignment[v]) & 1
        else:
            kept.append(v)
    return Factor(tuple(kept), f.table[tuple(idx)])


def _cpt_factor(cpt: Cpt) -> Factor:
    k = len(cpt.parents)
    # cpt.table is little-endian in the parents, so the first axis varies
    # fastest: a Fortran-order reshape puts axis b on parents[b]
    p_one = cpt.table.reshape((2,) * k, order="F") if k else cpt.table.reshape(())
    stacked = np.stack([1.0 - p_one, p_one], axis=-1)
    return Factor(tuple(cpt.parents) + (cpt.vertex,), stacked)


def _min_fill_order(scopes: Iterable[tuple], elim: set) -> list:
    """Greedy min-fill on the interaction graph, smallest-variable tie-break."""
    adj: dict[Hashable, set] = {}
    for scope in scopes:
        for v in scope:
            adj.setdefault(v, set())
        for a in scope:
            for b in scope:
                if a != b:
                    adj[a].add(b)
    order = []
    remaining = set(elim)
    while remaining:
        best = None
        best_fill = None
        for v in sorted(remaining):
            nbl = sorted(adj[v])
            fill = 0
            for i in range(len(nbl)):
                for j in range(i + 1, len(nbl)):
                    if nbl[j] not in adj[nbl[i]]:
                        fill += 1
            if best_fill is None or fill < best_fill:
                best, best_fill = v, fill
        nb = set(adj[best])
        for a in nb:
            adj[a] |= nb - {a}
            adj[a].discard(best)
        del adj[best]
        order.append(best)
        remaining.discard(best)
    return order


def _eliminate(factors: list[Factor], elim_order: Sequence) -> list[Factor]:
    factors = list(factors)
    for v in elim_order:
        touching = [f for f in factors if v in f.scope]
        if not touching:
            continue
        prod = touching[0]
        for f in touching[1:]:
            prod = factor_product(prod, f)
        factors = [f for f in factors if v not in f.scope]
        factors.append(marginalize(prod, v))
    return factors


@dataclass(frozen=True)
class Query:
    """Firm-level probability query P[targets | evidence].

    ``targets`` and ``evidence`` map firm index to a default indicator
    (1 = defaults); the rule names which compiled network answers it.
    """

    targets: Mapping[int, int]
    evidence: Mapping[int, int] = field(default_factory=dict)
    rule: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", dict(self.targets))
        object.__setattr__(self, "evidence", dict(self.evidence))
        if set(self.targets) & set(self.evidence):
            raise ValueError("targets and evidence firms overlap")
        for d in (*self.targets.values(), *self.evidence.values()):
            if d not in (0, 1):
                raise ValueError("default indicators must be 0 or 1")


def _var_value(bn: DiscreteBayesNet, default_indicator: int) -> int:
    return default_indicator if bn.default_value == 1 else 1 - default_indicator


def _ancestor_closure(bn: DiscreteBayesNet, seeds: Iterable) -> set:
    out: set = set()
    stack = list(seeds)
    while stack:
        v = stack.pop()
        if v not in out:
            out.add(v)
            stack.extend(bn.graph.parents_of(v))
    return out


def _conditional_factor(
    bn: DiscreteBayesNet,
    keep_vars: Sequence,
    evidence_vars: Mapping,
    order: Sequence | None = None,
    prune: bool = True,
) -> Factor:
    """Unnormalized joint over ``keep_vars`` with evidence reduced in."""
    if prune:
        relevant = _ancestor_closure(bn, list(keep_vars) + list(evidence_vars))
    else:
        relevant = set(bn.graph.vertices)
    factors = [_cpt_factor(bn.cpt_of(v)) for v in sorted(relevant)]
    if evidence_vars:
        factors = [reduce_evidence(f, evidence_vars) if set(f.scope) & set(evidence_vars) else f for f in factors]
    elim = relevant - set(keep_vars) - set(evidence_vars)
    if order is None:
        order = _min_fill_order([f.scope for f in factors], elim)
    else:
        if set(order) != elim:
            raise ValueError("elimination order must cover exactly the non-kept variables")
    remaining = _eliminate(factors, order)
    out = Factor((), np.array(1.0))
    for f in remaining:
        out = factor_product(out, f)
    return out


def query_prob(
    bn: DiscreteBayesNet,
    query: Query,
    order: Sequence | None = None,
    prune: bool = True,
) -> float:
    """Exact P[targets | evidence] by variable elimination.

    Raises ZeroEvidenceError when the evidence event has probability zero;
    that is a structural verdict, distinct from numerical underflow of a
    positive probability.
    """
    if not query.targets:
        raise ValueError("query needs at least one target firm")
    if query.rule is not None and query.rule != bn.rule:
        raise ValueError(f"query rule {query.rule!r} does not match the compiled net ({bn.rule!r})")
    target_vars = {bn.final_vertex(i): _var_value(bn, d) for i, d in query.targets.items()}
    evidence_vars = {bn.final_vertex(i): _var_value(bn, d) for i, d in query.evidence.items()}
    f = _conditional_factor(bn, sorted(target_vars), evidence_vars, order=order, prune=prune)
    p_evidence = float(f.table.sum())
    if p_evidence <= 0.0:
        raise ZeroEvidenceError(f"evidence {query.evidence} has probability zero")
    idx = tuple(target_vars[v] for v in f.scope)
    return float(f.table[idx]) / p_evidence


def joint_default_law(
    bn: DiscreteBayesNet,
    firms: Sequence[int],
    evidence: Mapping[int, int] | None = None,
) -> np.ndarray:
    """Joint law of the firms' default indicators, optionally conditional.

    Axis k of the result is firm ``firms[k]``; index 1 means default.
    """
    firms = list(firms)
    evidence = dict(evidence or {})
    if set(firms) & set(evidence):
        raise ValueError("queried firms overlap the evidence firms")
    keep = {bn.final_vertex(i): i for i in firms}
    evidence_vars = {bn.final_vertex(i): _var_value(bn, d) for i, d in evidence.items()}
    f = _conditional_factor(bn, sorted(keep), evidence_vars)
    mass = float(f.table.sum())
    if evidence:
        if mass <= 0.0:
            raise ZeroEvidenceError(f"evidence {evidence} has probability zero")
        table = f.table / mass
    else:
        table = f.table
    # reorder axes to the requested firm order
    perm = [f.scope.index(bn.final_vertex(i)) for i in firms]
    table = table.transpose(perm) if firms else table
    if bn.default_value == 0:
        table = table[(slice(None, None, -1),) * len(firms)]
    return np.ascontiguousarray(table)


@dataclass(frozen=True)
class CountDistribution:
    """Law of the number of defaulted firms over {0, ..., N}."""

    probabilities: np.ndarray
    method: str
    stderr: np.ndarray | None = None


def _bernoulli_convolution(probs: Sequence[float]) -> np.ndarray:
    """Exact law of a sum of independent Bernoulli variables.

    Probabilities are processed in ascending order so the recurrence mixes
    small increments first.
    """
    dist = np.array([1.0])
    for p in sorted(probs):
        nxt = np.empty(dist.size + 1)
        nxt[:-1] = dist * (1.0 - p)
        nxt[-1] = 0.0
        nxt[1:] += dist * p
        dist = nxt
    return dist


def count_distribution(
    bn: DiscreteBayesNet,
    max_exact_vars: int = 20,
    samples: int = 1_000_000,
    seed: int = 0,
    force_mc: bool = False,
) -> CountDistribution:
    """Distribution of the total number of defaults.

    Exact whenever the joint law of the non-sink firms fits in 2^20
    configurations; each sink firm then contributes an independent Bernoulli
    given that joint, handled by convolution.  Otherwise falls back to
    Monte-Carlo over cascade scenarios and reports binomial standard errors.
    """
    n = bn.num_firms
    g = bn.redemption
    sinks = [i for i in range(n) if not g.children_of(i)]
    nonsinks = [i for i in range(n) if g.children_of(i)]
    if force_mc or len(nonsinks) > max_exact_vars:
        return _count_mc(bn, samples, seed)

    law = joint_default_law(bn, nonsinks)
    sink_cpts = [bn.cpt_of((s, 1)) for s in sinks]
    out = np.zeros(n + 1)
    for idx in np.ndindex(law.shape) if nonsinks else [()]:
        w = float(law[idx]) if nonsinks else 1.0
        if w == 0.0:
            continue
        assignment = {
            bn.final_vertex(firm): _var_value(bn, idx[k]) for k, firm in enumerate(nonsinks)
        }
        sink_probs = []
        for cpt in sink_cpts:
            p_one = cpt.prob_one(assignment)
            sink_probs.append(p_one if bn.default_value == 1 else 1.0 - p_one)
        dist = _bernoulli_convolution(sink_probs)
        base = sum(idx)
        out[base:base + dist.size] += w * dist
    return CountDistribution(probabilities=out, method="exact")


def _count_mc(bn: DiscreteBayesNet, samples: int, seed: int) -> CountDistribution:
    n = bn.num_firms
    counts = np.zeros(n + 1)
    batch = mild_defaults_batch if bn.rule in ("mild", "dag") else strict_defaults_batch
    done = 0
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(math.ceil(samples / MC_BATCH))
    for child in children:
        m = min(MC_BATCH, samples - done)
        x = _terminal_from_seedseq(bn.net, child, m)
        d = batch(bn.net, x)
        counts += np.bincount(d.sum(axis=1), minlength=n + 1)
        done += m
    p = counts / samples
    se = np.sqrt(p * (1.0 - p) / samples)
    return CountDistribution(probabilities=p, method="monte-carlo", stderr=se)


def _terminal_from_seedseq(net: FinancialNetwork, seedseq: np.random.SeedSequence, size: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seedseq))
    z = rng.standard_normal((size, net.num_firms))
    t = net.horizon
    return net.x0 * np.exp((net.mu - 0.5 * net.sigma**2) * t + net.sigma * np.sqrt(t) * z)


def core_count_distribution(bn: DiscreteBayesNet, subset: Sequence[int]) -> np.ndarray:
    """Exact law of the number of defaults inside ``subset``."""
    subset = list(subset)
    if len(subset) > 20:
        raise ValueError("subset too large for exact enumeration (max 20 firms)")
    if not subset:
        return np.array([1.0])
    law = joint_default_law(bn, subset)
    out = np.zeros(len(subset) + 1)
    for idx in np.ndindex(law.shape):
        out[sum(idx)] += law[idx]
    return out


def mc_estimate(
    net: FinancialNetwork,
    query: Query,
    samples: int = 100_000,
    seed: int = 0,
    threads: int = 1,
) -> tuple[float, float]:
    """Frequency estimate of P[targets | evidence] from cascade scenarios.

    Conditional queries use rejection; the binomial standard error is based
    on the accepted count.  Batches are derived from the seed independently
    of the thread count, so results depend only on (net, query, samples,
    seed).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rule = query.rule or "mild"
    batch = mild_defaults_batch if rule in ("mild", "dag") else strict_defaults_batch
    ss = np.random.SeedSequence(seed)
    sizes = []
    remaining = samples
    while remaining > 0:
        sizes.append(min(MC_BATCH, remaining))
        remaining -= sizes[-1]
    children = ss.spawn(len(sizes))

    def run(args) -> tuple[int, int]:
        child, m = args
        x = _terminal_from_seedseq(net, child, m)
        d = batch(net, x)
        ok = np.ones(m, dtype=bool)
        for i, val in query.evidence.items():
            ok &= d[:, i] == bool(val)
        hit = ok.copy()
        for i, val in query.targets.items():
            hit &= d[:, i] == bool(val)
        return int(ok.sum()), int(hit.sum())

    jobs = list(zip(children, sizes))
    if threads > 1 and len(jobs) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    accepted = sum(r[0] for r in results)
    hits = sum(r[1] for r in results)
    if accepted == 0:
        raise ZeroEvidenceError("no scenario matched the evidence")
    p = hits / accepted
    se = math.sqrt(p * (1.0 - p) / accepted)
    return p, se


def brute_force_default_law(bn: DiscreteBayesNet) -> np.ndarray:
    """Reference joint law of firm defaults by enumerating the augmentation.

    Walks every assignment of the round variables in topological order,
    multiplying conditional probabilities and skipping zero branches (the
    monotone 0/1 entries prune most of the space), then accumulates on the
    terminal copies.  Independent of the variable-elimination machinery.
    """
    order = bn.graph.topological_order
    n = bn.num_firms
    out = np.zeros((2,) * n)
    finals = {bn.final_vertex(i): i for i in range(n)}
    values: dict = {}

    def walk(k: int, prob: float) -> None:
        if k == len(order):
            idx = [0] * n
            for v, firm in finals.items():
                d = values[v] if bn.default_value == 1 else 1 - values[v]
                idx[firm] = d
            out[tuple(idx)] += prob
            return
        v = order[k]
        cpt = bn.cpt_of(v)
        p_one = cpt.prob_one(values)
        for val, p in ((1, p_one), (0, 1.0 - p_one)):
            if p > 0.0:
                values[v] = val
                walk(k + 1, prob * p)
        del values[v]

    walk(0, 1.0)
    return out
