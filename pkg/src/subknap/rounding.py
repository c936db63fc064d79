"""Randomized rounding with the nearly-feasible filter and the fixing step."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import (
    FeasibilityClass,
    Instance,
    SolutionSet,
    as_index_set,
    classify,
    masks_from_sets,
    small_mask,
    solution,
    within_budget,
)
from .errors import PreconditionError
from .multilinear import as_point

DEFAULT_ATTEMPTS = 16


@dataclass(frozen=True)
class RoundingOutcome:
    drawn: SolutionSet
    filtered: SolutionSet
    fixed: SolutionSet
    draw_class: FeasibilityClass


def _members(S) -> tuple[int, ...]:
    return S.members if isinstance(S, SolutionSet) else tuple(sorted(int(i) for i in S))


def sample_round(inst: Instance, y, seed) -> SolutionSet:
    """Draw R ~ y: element i joins independently with probability y_i."""
    y = as_point(y, inst.n)
    rng = np.random.default_rng(seed)
    drawn = rng.random(inst.n) < y
    return solution(inst, np.flatnonzero(drawn))


def filter_nearly_feasible(inst: Instance, D, eps: float) -> SolutionSet:
    members = _members(D)
    if classify(inst, members, eps) is FeasibilityClass.INFEASIBLE:
        return solution(inst, ())
    return D if isinstance(D, SolutionSet) else solution(inst, members)


def partition_by_cost(inst: Instance, S: Iterable[int], r: int, eps: float) -> list[list[int]]:
    """Split S into groups whose dimension-r cost first reaches eps * L_r.

    Elements are taken in decreasing cost order; a trailing group that never
    reaches the threshold is merged into the previous one.
    """
    order = sorted(S, key=lambda i: (-inst.cost[r, i], i))
    threshold = eps * inst.budget[r]
    groups, current = [], []
    for i in order:
        current.append(i)
        if math.fsum(inst.cost[r, current]) >= threshold:
            groups.append(current)
            current = []
    if current:
        if groups:
            groups[-1].extend(current)
        else:
            groups.append(current)
    return groups


def _removal_valid(inst, S, group, r):
    # c_r(group) >= c_r(S) - L_r, evaluated exactly
    terms = [*inst.exact_cost[r, group].tolist(), *(-inst.exact_cost[r, S]).tolist(),
             *inst.budget_terms[r]]
    return math.fsum(terms) >= 0.0


def fix_nearly_feasible(inst: Instance, D, eps: float) -> SolutionSet:
    """Repair a nearly feasible set of small elements, one dimension at a time.

    For each violated dimension the set is partitioned by cost and the group
    with the least marginal value w.r.t. the rest of the set is dropped.
    """
    members = list(_members(D))
    small = small_mask(inst, eps)
    big = [i for i in members if not small[i]]
    if big:
        raise PreconditionError(f"fixing needs small elements only; {big} are big")
    if classify(inst, members, eps) is FeasibilityClass.INFEASIBLE:
        raise PreconditionError("fixing needs an eps-nearly feasible set")
    S = members
    for r in range(inst.d):
        while not within_budget(inst, S, r):
            groups = partition_by_cost(inst, S, r, eps)
            cand = [g for g in groups if _removal_valid(inst, S, g, r)]
            if not cand:
                # only reachable through rounding at the (1+eps) boundary
                cand = [max(groups, key=lambda g: math.fsum(inst.cost[r, g]))]
            rest = [sorted(set(S) - set(g)) for g in cand]
            f_rest = inst.oracle.eval_many(masks_from_sets(rest, inst.n))
            f_S = inst.oracle(S)
            j = int(np.argmin(f_S - f_rest))
            S = rest[j]
    if len(S) == len(members) and isinstance(D, SolutionSet):
        return D
    return solution(inst, S)


def attempt_seed(seed, k: int):
    return seed if k == 0 else [int(seed), k]


def round_once(inst: Instance, y, eps: float, seed) -> RoundingOutcome:
    drawn = sample_round(inst, y, seed)
    cls = classify(inst, drawn.members, eps)
    filtered = drawn if cls is not FeasibilityClass.INFEASIBLE else solution(inst, ())
    return RoundingOutcome(drawn, filtered, fix_nearly_feasible(inst, filtered, eps), cls)


def check_no_big_support(inst: Instance, y, eps: float) -> None:
    y = np.asarray(y)
    big = np.flatnonzero((y > 0) & ~small_mask(inst, eps))
    if big.size:
        raise PreconditionError(f"elements {big.tolist()} in the support are big")


def round_no_big(inst: Instance, y, eps: float, seed=0,
                 attempts: int = DEFAULT_ATTEMPTS) -> SolutionSet:
    """Sample, filter and fix ``attempts`` times; keep the best (earliest on ties)."""
    y = as_point(y, inst.n)
    check_no_big_support(inst, y, eps)
    best = None
    for k in range(max(1, attempts)):
        fixed = round_once(inst, y, eps, attempt_seed(seed, k)).fixed
        if best is None or fixed.value > best.value:
            best = fixed
    return best


def partition_into_feasible(inst: Instance, D) -> list[list[int]]:
    """Next-fit packing of D into sets that are each feasible on their own."""
    parts, current = [], []
    for i in sorted(_members(D)):
        trial = current + [i]
        if all(within_budget(inst, trial, r) for r in range(inst.d)):
            current = trial
        else:
            if current:
                parts.append(current)
            current = [i]
    if current:
        parts.append(current)
    return parts


__all__ = [
    "RoundingOutcome", "sample_round", "filter_nearly_feasible", "fix_nearly_feasible",
    "partition_by_cost", "round_once", "round_no_big", "partition_into_feasible",
    "attempt_seed", "check_no_big_support", "as_index_set",
]
