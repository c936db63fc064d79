"""Residual instances and the guess-and-round driver.

Every guess T of at most h elements leaves a residual instance with no big
elements; the continuous solver and a rounder run on each residual and the
best set over all guesses is returned.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .continuous import check_solver_output, make_solver
from .core import Instance, SolutionSet, as_index_set, cost_of_set, is_feasible, solution
from .errors import InputError, SolverError, SubknapError
from .report import RunReport
from .rounding import DEFAULT_ATTEMPTS, round_no_big

DESK_H_CAP = 3


@dataclass(frozen=True)
class ResidualInstance:
    base: Instance
    guess: tuple[int, ...]
    universe: tuple[int, ...]
    instance: Instance

    @property
    def budget(self) -> np.ndarray:
        return self.instance.budget


def paper_h(d: int, eps: float) -> int:
    """⌈d·ε⁻⁴⌉, with a relative guard so that exact integers are not bumped up."""
    x = d / eps ** 4
    return max(0, math.ceil(x * (1 - 1e-12)))


def default_h(d: int, eps: float) -> int:
    return min(paper_h(d, eps), DESK_H_CAP)


def residual(inst: Instance, T, eps: float) -> ResidualInstance:
    T = as_index_set(T, inst.n)
    if not is_feasible(inst, T):
        raise InputError(f"guess {T} exceeds the budget")
    terms = tuple(inst.budget_terms[r] +
                  tuple(-c for c in inst.exact_cost[r, list(T)].tolist())
                  for r in range(inst.d))
    budget = np.array([math.fsum(t) for t in terms]) / inst.raw_budget
    threshold = eps ** 3 * budget
    small = np.all(inst.cost <= threshold[:, None], axis=0) & inst.active
    in_T = np.zeros(inst.n, dtype=bool)
    in_T[list(T)] = True
    active = small | in_T
    cost = inst.exact_cost.copy()
    cost[:, in_T] = 0.0
    res = Instance.derived(inst, cost, terms, active)
    # no element of the residual universe may be big
    assert np.all(res.cost[:, active] <= (eps ** 3 * res.budget)[:, None])
    return ResidualInstance(inst, T, tuple(int(i) for i in np.flatnonzero(active)), res)


def guess_sets(inst: Instance, h: int) -> Iterator[tuple[int, ...]]:
    """Budget-feasible guesses by increasing size, lexicographic within a size."""
    if h < 0:
        raise InputError("h must be non-negative")
    pool = [int(i) for i in np.flatnonzero(inst.active)]
    for size in range(min(h, len(pool)) + 1):
        for T in itertools.combinations(pool, size):
            if is_feasible(inst, T):
                yield T


Rounder = Callable[[Instance, np.ndarray], tuple[SolutionSet, dict]]


def guess_and_round(inst: Instance, solver, eps: float, h: int, seed: int,
                    rounder: Rounder) -> tuple[SolutionSet, RunReport]:
    """Shared loop of both drivers; ``rounder`` maps a residual point to a set."""
    if not 0 < eps < 1:
        raise InputError("epsilon must lie in (0, 1)")
    solve = make_solver(solver) if isinstance(solver, str) else solver
    best, best_key, info_best = None, None, {}
    count = 0
    for T in guess_sets(inst, h):
        count += 1
        res = residual(inst, T, eps)
        try:
            y = check_solver_output(res.instance, solve(res.instance, seed))
        except SubknapError as exc:
            raise SolverError(f"continuous solver failed for guess {T}: {exc}", T) from exc
        rounded, info = rounder(res.instance, y)
        for cand, bare in ((rounded, False), (solution(inst, T), True)):
            key = (-cand.value, T, cand.members)
            if best_key is None or key < best_key:
                best, best_key = cand, key
                info_best = dict(info, guess=T, bare=bare)
    if best is None:
        best = solution(inst, ())
        info_best = {"guess": (), "bare": True}
    # re-evaluate against the base instance: residual costs differ on T
    best = SolutionSet(best.members, tuple(cost_of_set(inst, best.members).tolist()), best.value)
    if not is_feasible(inst, best.members):
        raise SubknapError(f"internal error: infeasible output {best.members}")
    report = RunReport(
        instance=inst.name or "", epsilon=eps, h_eff=h, h_paper=paper_h(inst.d, eps),
        seed=seed, value=best.value, feasible=True, members=best.members,
        best_guess=info_best.get("guess", ()), from_bare_guess=info_best.get("bare", False),
        frac_before=info_best.get("frac_before"), frac_after=info_best.get("frac_after"),
        guesses=count)
    return best, report


def solve_randomized(inst: Instance, solver="greedy", eps: float = 0.3, h: int | None = None,
                     seed: int = 0, attempts: int = DEFAULT_ATTEMPTS,
                     solver_options: dict | None = None) -> tuple[SolutionSet, RunReport]:
    """Guess up to h elements, solve each residual continuously and round randomly.

    Bare guesses T are also kept as candidates, so the result is never worse
    than the best enumerated feasible T even for non-monotone objectives.
    """
    h = default_h(inst.d, eps) if h is None else h
    fn = make_solver(solver, **(solver_options or {}))
    start = time.perf_counter()
    best, report = guess_and_round(
        inst, fn, eps, h, seed,
        lambda res, y: (round_no_big(res, y, eps, seed, attempts), {}))
    report.algorithm = "randomized"
    report.solver = solver if isinstance(solver, str) else getattr(solver, "__name__", "custom")
    report.attempts = attempts
    report.wall_ms = (time.perf_counter() - start) * 1e3
    return best, report
