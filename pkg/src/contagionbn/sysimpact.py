"""Systemic impact of one firm group's default on another group.

Both measures compare the target group's joint default law with its law
conditional on every source firm defaulting:

* absolute impact: total-variation distance,
  (1/2) sum_e |P[D_J = e | D_I = 1] - P[D_J = e]|;
* relative impact: worst log2 likelihood ratio over target configurations,
  max_e log2(P[D_J = e | D_I = 1] / P[D_J = e]), with 0/0 read as 1.

A zero-probability source event is an error.  A ratio with zero denominator
and positive numerator cannot arise from a common conditioning event, but
is reported as infinity rather than rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .bayesnet import DiscreteBayesNet
from .inference import joint_default_law

__all__ = ["ImpactReport", "asi", "rsi", "impact_matrix", "impact_report"]

MAX_TARGETS = 20


@dataclass(frozen=True)
class ImpactReport:
    source_set: frozenset[int]
    target_set: frozenset[int]
    asi: float
    rsi: float
    rule: str
    argmax_assignment: tuple[tuple[int, int], ...]


def _laws(bn: DiscreteBayesNet, source: Sequence[int], target: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    if set(source) & set(target):
        raise ValueError("source and target sets must be disjoint")
    if not source or not target:
        raise ValueError("source and target sets must be nonempty")
    if len(target) > MAX_TARGETS:
        raise ValueError(f"target set larger than {MAX_TARGETS} firms needs 2^|J| queries; refusing")
    base = joint_default_law(bn, target)
    cond = joint_default_law(bn, target, evidence={i: 1 for i in source})
    return base, cond


def asi(bn: DiscreteBayesNet, source: Iterable[int], target: Iterable[int]) -> float:
    """Absolute systemic impact: total variation between the two laws."""
    base, cond = _laws(bn, sorted(source), sorted(target))
    return 0.5 * float(np.abs(cond - base).sum())


def rsi(bn: DiscreteBayesNet, source: Iterable[int], target: Iterable[int]) -> float:
    """Relative systemic impact: max log2 ratio over target configurations."""
    return _rsi_with_argmax(bn, sorted(source), sorted(target))[0]


def _rsi_with_argmax(
    bn: DiscreteBayesNet, source: Sequence[int], target: Sequence[int]
) -> tuple[float, tuple[int, ...]]:
    base, cond = _laws(bn, source, target)
    best = -math.inf
    best_idx = (0,) * len(target)
    for idx in np.ndindex(base.shape):
        pb, pc = float(base[idx]), float(cond[idx])
        if pb == 0.0:
            ratio = math.inf if pc > 0.0 else 1.0  # 0/0 reads as 1
        else:
            ratio = pc / pb
        value = math.log2(ratio) if ratio > 0.0 else -math.inf
        if value > best:
            best, best_idx = value, idx
    return best, best_idx


def impact_matrix(bn: DiscreteBayesNet, firms: Sequence[int]) -> list[ImpactReport]:
    """Pairwise single-firm impact reports over ordered pairs of ``firms``.

    Unconditional target laws are shared across sources; each source costs
    one conditional elimination per target.
    """
    base_cache: dict[int, np.ndarray] = {
        j: joint_default_law(bn, [j]) for j in firms
    }
    reports = []
    for i in firms:
        for j in firms:
            if i == j:
                continue
            cond = joint_default_law(bn, [j], evidence={i: 1})
            base = base_cache[j]
            a = 0.5 * float(np.abs(cond - base).sum())
            best = -math.inf
            best_e = 0
            for e in (0, 1):
                pb, pc = float(base[e]), float(cond[e])
                if pb == 0.0:
                    ratio = math.inf if pc > 0.0 else 1.0
                else:
                    ratio = pc / pb
                value = math.log2(ratio) if ratio > 0.0 else -math.inf
                if value > best:
                    best, best_e = value, e
            reports.append(
                ImpactReport(
                    source_set=frozenset({i}),
                    target_set=frozenset({j}),
                    asi=a,
                    rsi=best,
                    rule=bn.rule,
                    argmax_assignment=((j, best_e),),
                )
            )
    return reports


def impact_report(bn: DiscreteBayesNet, source: Iterable[int], target: Iterable[int]) -> ImpactReport:
    """ASI and RSI for one (source, target) pair with the attaining assignment."""
    source, target = sorted(source), sorted(target)
    base, cond = _laws(bn, source, target)
    a = 0.5 * float(np.abs(cond - base).sum())
    r, idx = _rsi_with_argmax(bn, source, target)
    return ImpactReport(
        source_set=frozenset(source),
        target_set=frozenset(target),
        asi=a,
        rsi=r,
        rule=bn.rule,
        argmax_assignment=tuple(zip(target, idx)),
    )
