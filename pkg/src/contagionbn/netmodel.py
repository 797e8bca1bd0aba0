"""Balance-sheet model of an interconnected financial system.

A system of N firms holds mutual zero-coupon loans maturing at a common
horizon T.  Firm i starts with operating assets x0 (evolving as a geometric
Brownian motion), cash k0 (riskless rate r0), external debt f (rate r0_ext),
and a matrix of interfirm loans: liabilities[i, j] is the amount firm i lent
to firm j, to be repaid by j at T with the continuously compounded rate
loan_rates[i, j].

The redemption graph puts an edge from every debtor to each of its creditors
(i -> j exactly when j lent money to i).  Its strongly connected components
control whether the default fixed point is almost surely unique and how many
per-firm round variables the Bayesian network compilation needs.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "FirmParams",
    "FinancialNetwork",
    "ValidationIssue",
    "ValidationReport",
    "RedemptionGraph",
    "SccDecomposition",
    "validate_network",
    "build_redemption_graph",
    "redemption_graph_from_edges",
    "scc_decompose",
    "is_dag",
    "network_to_dict",
    "network_from_dict",
    "dumps_network",
    "loads_network",
    "load_network",
    "save_network",
]


@dataclass(frozen=True)
class FirmParams:
    """Per-firm balance sheet at t=0 plus the asset dynamics parameters.

    Out-of-range values (e.g. a negative cash position) are representable;
    ``validate_network`` reports them as data rather than raising.
    """

    operating_assets_0: float
    cash_0: float
    external_liability: float
    drift: float
    volatility: float


class FinancialNetwork:
    """Immutable container for the firm parameters and the loan book.

    ``liabilities[i, j]`` is the notional firm i lent firm j (j owes i);
    ``loan_rates[i, j]`` the continuously compounded rate on that loan.
    Interest rates of any sign are accepted.
    """

    def __init__(
        self,
        firms: Sequence[FirmParams],
        liabilities: np.ndarray,
        loan_rates: np.ndarray | None = None,
        riskless_rate: float = 0.0,
        external_rate: float = 0.0,
        horizon: float = 1.0,
    ):
        self.firms = tuple(firms)
        n = len(self.firms)
        liab = np.array(liabilities, dtype=float)
        rates = np.zeros((n, n)) if loan_rates is None else np.array(loan_rates, dtype=float)
        liab.setflags(write=False)
        rates.setflags(write=False)
        self.liabilities = liab
        self.loan_rates = rates
        self.riskless_rate = float(riskless_rate)
        self.external_rate = float(external_rate)
        self.horizon = float(horizon)

        self.x0 = _frozen(np.array([f.operating_assets_0 for f in self.firms]))
        self.k0 = _frozen(np.array([f.cash_0 for f in self.firms]))
        self.f_ext = _frozen(np.array([f.external_liability for f in self.firms]))
        self.mu = _frozen(np.array([f.drift for f in self.firms]))
        self.sigma = _frozen(np.array([f.volatility for f in self.firms]))

        if liab.shape == (n, n):
            # claim values at maturity: maturity_claims[i, j] = e^{r_ij T} L_ij
            self.maturity_claims = _frozen(np.exp(rates * self.horizon) * liab)
            # what firm i owes at T: external debt plus accrued interfirm debt
            owed_interfirm = self.maturity_claims.sum(axis=0)
            self.debt_at_maturity = _frozen(
                np.exp(self.external_rate * self.horizon) * self.f_ext + owed_interfirm
            )
            self.cash_at_maturity = _frozen(np.exp(self.riskless_rate * self.horizon) * self.k0)

    @property
    def num_firms(self) -> int:
        return len(self.firms)

    def __repr__(self) -> str:
        return f"FinancialNetwork(n={self.num_firms}, horizon={self.horizon})"


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ValidationIssue:
    kind: str
    firms: tuple[int, ...]
    message: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...]

    @property
    def ok(self) -> bool:
        return not self.issues

    def __str__(self) -> str:
        if self.ok:
            return "network valid"
        return "\n".join(f"[{i.kind}] firms {tuple(f + 1 for f in i.firms)}: {i.message}" for i in self.issues)


def validate_network(net: FinancialNetwork) -> ValidationReport:
    """Check the model constraints and return every violation found.

    Violations are data, not exceptions.  Beyond shape and sign checks, the
    decisive constraint is the cash bound: each firm's cash must stay
    strictly below the discounted value of its total obligations,

        k0_i < e^{(r0_ext - r0) T} f_i + sum_j e^{(r_ji - r0) T} L_ji,

    otherwise the firm could never default and does not belong in the model.
    The comparison is exact (no epsilon): the bound is a modeling assumption,
    not a numerical quantity.
    """
    issues: list[ValidationIssue] = []
    n = net.num_firms
    if net.liabilities.shape != (n, n) or net.loan_rates.shape != (n, n):
        issues.append(
            ValidationIssue(
                "shape",
                (),
                f"liabilities {net.liabilities.shape} / loan_rates {net.loan_rates.shape}, expected {(n, n)}",
            )
        )
        return ValidationReport(tuple(issues))
    if not net.horizon > 0:
        issues.append(ValidationIssue("horizon", (), f"horizon {net.horizon} must be positive"))

    for i, firm in enumerate(net.firms):
        if not firm.operating_assets_0 > 0:
            issues.append(ValidationIssue("nonpositive_assets", (i,), f"x0={firm.operating_assets_0}"))
        if not firm.volatility > 0:
            issues.append(ValidationIssue("nonpositive_volatility", (i,), f"sigma={firm.volatility}"))
        if firm.cash_0 < 0:
            issues.append(ValidationIssue("negative_cash", (i,), f"k0={firm.cash_0}"))
        if firm.external_liability < 0:
            issues.append(ValidationIssue("negative_external_liability", (i,), f"f={firm.external_liability}"))

    for i in range(n):
        if net.liabilities[i, i] != 0.0:
            issues.append(ValidationIssue("self_loan", (i,), f"L[{i},{i}]={net.liabilities[i, i]}"))
    neg = np.argwhere(net.liabilities < 0)
    for i, j in neg:
        issues.append(ValidationIssue("negative_liability", (int(i), int(j)), f"L[{i},{j}]={net.liabilities[i, j]}"))

    t = net.horizon
    growth = np.exp((net.loan_rates - net.riskless_rate) * t)
    bound = np.exp((net.external_rate - net.riskless_rate) * t) * net.f_ext + (
        growth * net.liabilities
    ).sum(axis=0)
    for i in range(n):
        if not net.k0[i] < bound[i]:
            issues.append(
                ValidationIssue(
                    "cash_bound",
                    (i,),
                    f"cash {net.k0[i]} >= discounted obligations {bound[i]}; firm can never default",
                )
            )
    return ValidationReport(tuple(issues))


class RedemptionGraph:
    """Directed graph with an edge from each debtor to each of its creditors.

    Vertices are firm indices 0..n-1; (i, j) is an edge exactly when
    liabilities[j, i] > 0.  Parent, child, ancestor, descendant and
    non-descendant indexes are precomputed and immutable.
    """

    def __init__(self, num_vertices: int, edges: Iterable[tuple[int, int]]):
        self.num_vertices = int(num_vertices)
        self.edges = frozenset((int(a), int(b)) for a, b in edges)
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop {a}->{b} not allowed")
            if not (0 <= a < self.num_vertices and 0 <= b < self.num_vertices):
                raise ValueError(f"edge {(a, b)} outside vertex range")
        children: list[list[int]] = [[] for _ in range(self.num_vertices)]
        parents: list[list[int]] = [[] for _ in range(self.num_vertices)]
        for a, b in sorted(self.edges):
            children[a].append(b)
            parents[b].append(a)
        self._children = tuple(tuple(c) for c in children)
        self._parents = tuple(tuple(p) for p in parents)
        self._descendants = tuple(self._reach(v, self._children) for v in range(self.num_vertices))
        self._ancestors = tuple(self._reach(v, self._parents) for v in range(self.num_vertices))

    def _reach(self, start: int, adj: tuple[tuple[int, ...], ...]) -> frozenset[int]:
        seen: set[int] = set()
        stack = list(adj[start])
        while stack:
            v = stack.pop()
            if v not in seen:
                seen.add(v)
                stack.extend(adj[v])
        return frozenset(seen)

    @property
    def vertices(self) -> range:
        return range(self.num_vertices)

    def parents_of(self, v: int) -> tuple[int, ...]:
        return self._parents[v]

    def children_of(self, v: int) -> tuple[int, ...]:
        return self._children[v]

    def ancestors_of(self, v: int) -> frozenset[int]:
        return self._ancestors[v]

    def descendants_of(self, v: int) -> frozenset[int]:
        return self._descendants[v]

    def non_descendants_of(self, v: int) -> frozenset[int]:
        return frozenset(self.vertices) - {v} - self._descendants[v]

    def __repr__(self) -> str:
        return f"RedemptionGraph(n={self.num_vertices}, edges={len(self.edges)})"


def build_redemption_graph(net: FinancialNetwork) -> RedemptionGraph:
    """Edge (i, j) for every positive loan from j to i."""
    lenders, borrowers = np.nonzero(net.liabilities > 0)
    return RedemptionGraph(net.num_firms, zip(borrowers.tolist(), lenders.tolist()))


def redemption_graph_from_edges(num_vertices: int, edges: Iterable[tuple[int, int]]) -> RedemptionGraph:
    """Bare-graph constructor for structural work that has no loan book."""
    return RedemptionGraph(num_vertices, edges)


@dataclass(frozen=True)
class SccDecomposition:
    """Strongly connected components in a creditor-compatible order.

    Components are ordered so that no vertex has a parent in a later
    component; incomparable components are ordered by their smallest
    contained vertex, which makes the order deterministic.
    """

    components: tuple[frozenset[int], ...]
    component_of: tuple[int, ...]
    component_size_of: tuple[int, ...]


def _tarjan_components(num_vertices: int, children: Sequence[Sequence[int]]) -> list[set[int]]:
    """Iterative Tarjan; components are emitted sinks-first."""
    index_of: dict[int, int] = {}
    lowlink: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    components: list[set[int]] = []
    counter = 0

    for root in range(num_vertices):
        if root in index_of:
            continue
        work = [(root, iter(children[root]))]
        index_of[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index_of:
                    index_of[w] = lowlink[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(children[w])))
                    advanced = True
                    break
                if w in on_stack:
                    lowlink[v] = min(lowlink[v], index_of[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index_of[v]:
                comp: set[int] = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                components.append(comp)
    return components


def scc_decompose(g: RedemptionGraph) -> SccDecomposition:
    """Group vertices into maximal mutually reachable sets and order them.

    The returned order is a topological sort of the component condensation
    (debtor components first), with ties between incomparable components
    broken by smallest contained vertex index.
    """
    raw = _tarjan_components(g.num_vertices, [g.children_of(v) for v in g.vertices])
    comp_of = [0] * g.num_vertices
    for idx, comp in enumerate(raw):
        for v in comp:
            comp_of[v] = idx

    m = len(raw)
    succ: list[set[int]] = [set() for _ in range(m)]
    indeg = [0] * m
    for a, b in g.edges:
        ca, cb = comp_of[a], comp_of[b]
        if ca != cb and cb not in succ[ca]:
            succ[ca].add(cb)
            indeg[cb] += 1

    key = [min(comp) for comp in raw]
    heap = [(key[c], c) for c in range(m) if indeg[c] == 0]
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        _, c = heapq.heappop(heap)
        order.append(c)
        for d in succ[c]:
            indeg[d] -= 1
            if indeg[d] == 0:
                heapq.heappush(heap, (key[d], d))

    components = tuple(frozenset(raw[c]) for c in order)
    position = {c: i for i, c in enumerate(order)}
    component_of = tuple(position[comp_of[v]] for v in range(g.num_vertices))
    component_size_of = tuple(len(components[component_of[v]]) for v in range(g.num_vertices))
    return SccDecomposition(components, component_of, component_size_of)


def is_dag(g: RedemptionGraph) -> bool:
    """True when every strongly connected component is a singleton."""
    scc = scc_decompose(g)
    return all(size == 1 for size in scc.component_size_of)


# ---------------------------------------------------------------------------
# JSON input format
#
# {"firms": [{"x0", "k0", "f", "mu", "sigma"}, ...],
#  "loans": [{"lender", "borrower", "amount", "rate"}, ...],
#  "r0": 0.0, "r0_ext": 0.0, "horizon": 1.0}
#
# Indices in the file are 0-based.  Serialization is canonical: fixed key
# order, loans sorted by (lender, borrower), floats with 17 significant
# digits, so load -> dump is byte-stable.
# ---------------------------------------------------------------------------


def network_from_dict(doc: Mapping) -> FinancialNetwork:
    firms = [
        FirmParams(
            operating_assets_0=float(f["x0"]),
            cash_0=float(f.get("k0", 0.0)),
            external_liability=float(f.get("f", 0.0)),
            drift=float(f["mu"]),
            volatility=float(f["sigma"]),
        )
        for f in doc["firms"]
    ]
    n = len(firms)
    liab = np.zeros((n, n))
    rates = np.zeros((n, n))
    for loan in doc.get("loans", ()):
        i, j = int(loan["lender"]), int(loan["borrower"])
        liab[i, j] = float(loan["amount"])
        rates[i, j] = float(loan.get("rate", 0.0))
    return FinancialNetwork(
        firms,
        liab,
        rates,
        riskless_rate=float(doc.get("r0", 0.0)),
        external_rate=float(doc.get("r0_ext", 0.0)),
        horizon=float(doc.get("horizon", 1.0)),
    )


def network_to_dict(net: FinancialNetwork) -> dict:
    loans = []
    for i, j in sorted(zip(*np.nonzero(net.liabilities > 0))):
        loans.append(
            {
                "lender": int(i),
                "borrower": int(j),
                "amount": float(net.liabilities[i, j]),
                "rate": float(net.loan_rates[i, j]),
            }
        )
    return {
        "firms": [
            {
                "x0": f.operating_assets_0,
                "k0": f.cash_0,
                "f": f.external_liability,
                "mu": f.drift,
                "sigma": f.volatility,
            }
            for f in net.firms
        ],
        "loans": loans,
        "r0": net.riskless_rate,
        "r0_ext": net.external_rate,
        "horizon": net.horizon,
    }


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, Mapping):
        inner = ", ".join(f"{json.dumps(k)}: {_fmt(v)}" for k, v in value.items())
        return "{" + inner + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value)!r}")


def dumps_network(net: FinancialNetwork) -> str:
    return _fmt(network_to_dict(net)) + "\n"


def loads_network(text: str) -> FinancialNetwork:
    return network_from_dict(json.loads(text))


def load_network(path) -> FinancialNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_network(fh.read())


def save_network(net: FinancialNetwork, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_network(net))
