"""Instances, submodular oracles and cost/feasibility arithmetic.

Sets are passed around as iterables of element indices and normalised to
sorted tuples.  Batched evaluation works on boolean masks of shape
``(k, n)``; every oracle implements it so that enumeration and sampling
never loop over subsets in Python.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

TABLE_MAX_N = 20
_MONOTONE_FULL_CHECK_N = 12


def as_index_set(S: Iterable[int], n: int) -> tuple[int, ...]:
    members = sorted(set(int(i) for i in S))
    if members and (members[0] < 0 or members[-1] >= n):
        raise InputError(f"index out of range for universe of size {n}: {members}")
    return tuple(members)


def masks_from_sets(sets: Sequence[Iterable[int]], n: int) -> np.ndarray:
    masks = np.zeros((len(sets), n), dtype=bool)
    for row, S in enumerate(sets):
        masks[row, list(as_index_set(S, n))] = True
    return masks


def masks_from_codes(codes: np.ndarray, positions: Sequence[int], n: int,
                     base: np.ndarray | None = None) -> np.ndarray:
    """Expand integer codes into masks; bit b of a code switches on ``positions[b]``."""
    codes = np.asarray(codes, dtype=np.int64)
    masks = np.zeros((codes.shape[0], n), dtype=bool)
    if base is not None:
        masks[:] = base
    for b, pos in enumerate(positions):
        masks[:, pos] |= ((codes >> b) & 1).astype(bool)
    return masks


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

class SubmodularOracle:
    """Value oracle for a set function over ``{0..n-1}``.

    Subclasses implement :meth:`eval_many`.  Those with a polynomial formula
    for the multilinear extension also implement :meth:`multilinear_batch`.
    """

    kind = "abstract"
    has_closed_form = False

    def __init__(self, n: int, monotone: bool):
        if n < 0:
            raise InputError("universe size must be non-negative")
        self.n = int(n)
        self.monotone = bool(monotone)

    def eval_many(self, masks: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def multilinear_batch(self, Y: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{self.kind} oracle has no closed-form extension")

    def __call__(self, S: Iterable[int]) -> float:
        members = as_index_set(S, self.n)
        mask = np.zeros((1, self.n), dtype=bool)
        mask[0, list(members)] = True
        return float(self.eval_many(mask)[0])

    def payload(self) -> dict:
        raise NotImplementedError


class CoverageOracle(SubmodularOracle):
    """f(S) = total profit of the items adjacent to some element of S."""

    kind = "coverage"
    has_closed_form = True

    def __init__(self, sets: Sequence[Sequence[int]], profits: Sequence[float]):
        super().__init__(len(sets), monotone=True)
        self.profits = np.asarray(profits, dtype=float).reshape(-1)
        m = self.profits.shape[0]
        if np.any(self.profits < 0) or not np.all(np.isfinite(self.profits)):
            raise InputError("coverage profits must be finite and non-negative")
        self.sets = tuple(tuple(sorted(set(int(v) for v in items))) for items in sets)
        adj = np.zeros((self.n, m), dtype=bool)
        for i, items in enumerate(self.sets):
            if items and (items[0] < 0 or items[-1] >= m):
                raise InputError(f"set {i} references an item outside 0..{m - 1}")
            adj[i, list(items)] = True
        self.adjacency = adj
        self._adj_f = adj.astype(float)

    def eval_many(self, masks):
        masks = np.asarray(masks, dtype=bool)
        covered = (masks.astype(float) @ self._adj_f) > 0
        return covered.astype(float) @ self.profits

    def multilinear_batch(self, Y):
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        miss = np.where(self.adjacency[None, :, :], 1.0 - Y[:, :, None], 1.0)
        return (1.0 - miss.prod(axis=1)) @ self.profits

    def payload(self):
        return {"sets": [list(s) for s in self.sets], "profits": self.profits.tolist()}


class CutOracle(SubmodularOracle):
    """Weight of the edges leaving S (directed) or crossing S (undirected)."""

    kind = "cut"
    has_closed_form = True

    def __init__(self, n: int, edges: Sequence[Sequence[float]], directed: bool = False):
        super().__init__(n, monotone=False)
        self.directed = bool(directed)
        parsed = []
        for k, e in enumerate(edges):
            if len(e) != 3:
                raise InputError(f"edge {k} must be [u, v, w]")
            u, v, w = int(e[0]), int(e[1]), float(e[2])
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge {k} has an endpoint outside 0..{n - 1}")
            if w < 0 or not math.isfinite(w):
                raise InputError(f"edge {k} has a negative or non-finite weight")
            parsed.append((u, v, w))
        self.edges = tuple(parsed)
        self._u = np.array([e[0] for e in parsed], dtype=np.int64)
        self._v = np.array([e[1] for e in parsed], dtype=np.int64)
        self._w = np.array([e[2] for e in parsed], dtype=float)

    def eval_many(self, masks):
        masks = np.asarray(masks, dtype=bool)
        if not self.edges:
            return np.zeros(masks.shape[0])
        a, b = masks[:, self._u], masks[:, self._v]
        crossing = (a & ~b) if self.directed else (a ^ b)
        return crossing.astype(float) @ self._w

    def multilinear_batch(self, Y):
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if not self.edges:
            return np.zeros(Y.shape[0])
        a, b = Y[:, self._u], Y[:, self._v]
        p = a * (1.0 - b)
        if not self.directed:
            p = p + b * (1.0 - a)
        return p @ self._w

    def payload(self):
        return {"edges": [[u, v, w] for u, v, w in self.edges], "directed": self.directed}


class ModularOracle(SubmodularOracle):
    kind = "modular"
    has_closed_form = True

    def __init__(self, weights: Sequence[float]):
        w = np.asarray(weights, dtype=float).reshape(-1)
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InputError("modular weights must be finite and non-negative")
        super().__init__(w.shape[0], monotone=True)
        self.weights = w

    def eval_many(self, masks):
        return np.asarray(masks, dtype=bool).astype(float) @ self.weights

    def multilinear_batch(self, Y):
        return np.atleast_2d(np.asarray(Y, dtype=float)) @ self.weights

    def payload(self):
        return {"weights": self.weights.tolist()}


class TableOracle(SubmodularOracle):
    """Explicit values for all 2^n subsets; bit i of the index is element i."""

    kind = "table"

    def __init__(self, values: Sequence[float], monotone: bool = False, seed: int = 0):
        vals = np.asarray(values, dtype=float).reshape(-1)
        n = int(round(math.log2(vals.shape[0]))) if vals.shape[0] > 0 else -1
        if n < 0 or (1 << n) != vals.shape[0]:
            raise InputError(f"table must have 2^n entries, got {vals.shape[0]}")
        if n > TABLE_MAX_N:
            raise InputError(f"table oracle supports n <= {TABLE_MAX_N}, got {n}")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise InputError("table values must be finite and non-negative")
        super().__init__(n, monotone=monotone)
        self.values = vals
        self._bits = (np.int64(1) << np.arange(n, dtype=np.int64))
        if monotone:
            self._check_monotone(seed)

    def _check_monotone(self, seed):
        n, vals = self.n, self.values
        if n <= _MONOTONE_FULL_CHECK_N:
            idx = np.arange(1 << n, dtype=np.int64)
            for i in range(n):
                without = idx[(idx >> i) & 1 == 0]
                bad = vals[without] > vals[without | (1 << i)]
                if np.any(bad):
                    raise InputError(f"table declared monotone but adding element {i} "
                                     f"decreases the value of set code {int(without[bad][0])}")
            return
        rng = np.random.default_rng(seed)
        codes = rng.integers(0, 1 << n, size=20000, dtype=np.int64)
        elems = rng.integers(0, n, size=codes.shape[0])
        up = codes | (np.int64(1) << elems)
        if np.any(vals[codes] > vals[up]):
            raise InputError("table declared monotone but a sampled check failed")

    def eval_many(self, masks):
        masks = np.asarray(masks, dtype=bool)
        return self.values[masks.astype(np.int64) @ self._bits]

    def payload(self):
        return {"values": self.values.tolist(), "monotone": self.monotone}


def evaluate(oracle: SubmodularOracle, S: Iterable[int]) -> float:
    return oracle(S)


def marginal(oracle: SubmodularOracle, T: Iterable[int], S: Iterable[int]) -> float:
    """f_T(S) = f(S ∪ T) − f(T)."""
    T = as_index_set(T, oracle.n)
    S = as_index_set(S, oracle.n)
    vals = oracle.eval_many(masks_from_sets([set(S) | set(T), T], oracle.n))
    return float(vals[0] - vals[1])


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------

class Instance:
    """d knapsack constraints over a universe of n elements plus an objective.

    ``cost`` and ``budget`` are normalised so that every budget equals one;
    thresholds such as the small-element bound use them.  Feasibility is
    decided on the raw values instead: ``exact_cost`` holds the raw costs and
    ``budget_terms`` stores each budget as a tuple of floats whose exact sum
    is the budget, so residual budgets ``L - c(T)`` need no rounding either.
    """

    def __init__(self, cost, budget, oracle: SubmodularOracle, name: str | None = None):
        raw_cost = np.array(cost, dtype=float, ndmin=2)
        raw_budget = np.array(budget, dtype=float, ndmin=1)
        if raw_cost.ndim != 2:
            raise InputError("cost must be a d x n matrix")
        d, n = raw_cost.shape
        if raw_budget.shape != (d,):
            raise InputError(f"budget has length {raw_budget.shape[0]}, expected d={d}")
        if oracle.n != n:
            raise InputError(f"oracle is defined on {oracle.n} elements, costs on {n}")
        if not np.all(np.isfinite(raw_cost)) or np.any(raw_cost < 0):
            raise InputError("costs must be finite and non-negative")
        if not np.all(np.isfinite(raw_budget)) or np.any(raw_budget <= 0):
            raise InputError("budgets must be finite and positive")
        raw_cost.setflags(write=False)
        raw_budget.setflags(write=False)
        self.raw_cost = raw_cost
        self.raw_budget = raw_budget
        self._setup(raw_cost, tuple((float(b),) for b in raw_budget),
                    oracle, np.ones(n, dtype=bool), name)

    def _setup(self, exact_cost, budget_terms, oracle, active, name):
        self.exact_cost = np.array(exact_cost, dtype=float)
        self.exact_cost.setflags(write=False)
        self.budget_terms = tuple(tuple(float(t) for t in terms) for terms in budget_terms)
        self.cost = self.exact_cost / self.raw_budget[:, None]
        self.cost.setflags(write=False)
        self.budget = np.array([math.fsum(t) for t in self.budget_terms]) / self.raw_budget
        self.budget.setflags(write=False)
        self.oracle = oracle
        self.active = np.array(active, dtype=bool)
        self.active.setflags(write=False)
        self.name = name
        self.metadata = {}

    @classmethod
    def derived(cls, parent: "Instance", exact_cost, budget_terms, active,
                name=None) -> "Instance":
        """An instance sharing ``parent``'s oracle and budget scale.

        ``exact_cost`` and ``budget_terms`` are in the parent's raw units.
        """
        inst = cls.__new__(cls)
        inst.raw_cost = parent.raw_cost
        inst.raw_budget = parent.raw_budget
        inst._setup(exact_cost, budget_terms, parent.oracle, active, name or parent.name)
        return inst

    @property
    def n(self) -> int:
        return self.cost.shape[1]

    @property
    def d(self) -> int:
        return self.cost.shape[0]

    def __repr__(self):
        return f"Instance(name={self.name!r}, n={self.n}, d={self.d}, oracle={self.oracle.kind})"


@dataclass(frozen=True)
class SolutionSet:
    members: tuple[int, ...]
    cost: tuple[float, ...]
    value: float

    def __len__(self):
        return len(self.members)


def solution(inst: Instance, S: Iterable[int]) -> SolutionSet:
    members = as_index_set(S, inst.n)
    return SolutionSet(members, tuple(cost_of_set(inst, members).tolist()),
                       inst.oracle(members))


class FeasibilityClass(enum.Enum):
    FEASIBLE = "feasible"
    NEARLY_FEASIBLE = "nearly_feasible"
    INFEASIBLE = "infeasible"


def cost_of_set(inst: Instance, S: Iterable[int]) -> np.ndarray:
    members = list(as_index_set(S, inst.n))
    return np.array([math.fsum(inst.cost[r, members]) for r in range(inst.d)])


def cost_of_point(inst: Instance, y) -> np.ndarray:
    """Correctly rounded value of the exact weighted cost sum."""
    y = np.asarray(y, dtype=float)
    return np.array([float(_exact_load(inst.cost[r], y)) for r in range(inst.d)])


def _exact_load(costs, y) -> Fraction:
    total = Fraction(0)
    for c, v in zip(costs.tolist(), y.tolist()):
        if c and v:
            total += Fraction(c) * Fraction(v)
    return total


def within_budget(inst: Instance, S: Iterable[int], r: int, scale: float = 1.0) -> bool:
    """Exact test of ``c_r(S) <= scale * L_r``."""
    members = list(S)
    terms = [-scale * t for t in inst.budget_terms[r]] if scale != 1.0 else \
        [-t for t in inst.budget_terms[r]]
    return math.fsum([*inst.exact_cost[r, members].tolist(), *terms]) <= 0.0


def is_feasible(inst: Instance, S: Iterable[int]) -> bool:
    members = as_index_set(S, inst.n)
    return all(within_budget(inst, members, r) for r in range(inst.d))


def classify(inst: Instance, S: Iterable[int], eps: float) -> FeasibilityClass:
    if eps <= 0:
        raise InputError("epsilon must be positive")
    members = as_index_set(S, inst.n)
    if all(within_budget(inst, members, r) for r in range(inst.d)):
        return FeasibilityClass.FEASIBLE
    if all(within_budget(inst, members, r, 1.0 + eps) for r in range(inst.d)):
        return FeasibilityClass.NEARLY_FEASIBLE
    return FeasibilityClass.INFEASIBLE


def point_within_budget(inst: Instance, y) -> bool:
    """Exact test of ``sum_i y_i c(i) <= L`` in every dimension."""
    y = np.asarray(y, dtype=float)
    for r in range(inst.d):
        budget = sum((Fraction(t) for t in inst.budget_terms[r]), Fraction(0))
        if _exact_load(inst.exact_cost[r], y) > budget:
            return False
    return True


def small_threshold(inst: Instance, eps: float) -> np.ndarray:
    return eps ** 3 * inst.budget


def is_small(inst: Instance, i: int, eps: float) -> bool:
    if not 0 <= i < inst.n:
        raise InputError(f"element {i} outside 0..{inst.n - 1}")
    return bool(np.all(inst.cost[:, i] <= small_threshold(inst, eps)))


def small_mask(inst: Instance, eps: float) -> np.ndarray:
    return np.all(inst.cost <= small_threshold(inst, eps)[:, None], axis=0)


# ---------------------------------------------------------------------------
# property checks (submodularity and related set-function inequalities)
# ---------------------------------------------------------------------------

def _random_masks(rng, k, n, p=None):
    p = rng.random((k, 1)) if p is None else p
    return rng.random((k, n)) < p


def submodularity_violations(oracle: SubmodularOracle, trials: int, seed: int,
                             tol: float = 1e-9) -> int:
    """Count pairs with f(S) + f(T) < f(S ∪ T) + f(S ∩ T) - tol."""
    rng = np.random.default_rng(seed)
    S = _random_masks(rng, trials, oracle.n)
    T = _random_masks(rng, trials, oracle.n)
    f = oracle.eval_many
    lhs = f(S) + f(T)
    rhs = f(S | T) + f(S & T)
    return int(np.sum(lhs < rhs - tol))


def monotonicity_violations(oracle, trials, seed, tol=1e-9) -> int:
    rng = np.random.default_rng(seed)
    T = _random_masks(rng, trials, oracle.n)
    S = T & _random_masks(rng, trials, oracle.n)
    return int(np.sum(oracle.eval_many(S) > oracle.eval_many(T) + tol))


def _random_partition_labels(rng, trials, n, max_parts):
    parts = rng.integers(1, max_parts + 1, size=(trials, 1))
    return (rng.random((trials, n)) * parts).astype(np.int64), parts.reshape(-1)


def subadditivity_violations(oracle, trials, seed, max_parts=4, tol=1e-9) -> int:
    """Disjoint S_1..S_k with f(∪S_i) > Σ f(S_i) + tol.

    This is the direction that holds for every submodular f with f(∅) >= 0,
    and the one used when bounding the value of an over-budget draw.
    """
    rng = np.random.default_rng(seed)
    S = _random_masks(rng, trials, oracle.n)
    labels, parts = _random_partition_labels(rng, trials, oracle.n, max_parts)
    total = np.zeros(trials)
    for j in range(max_parts):
        piece = S & (labels == j)
        total += np.where(j < parts, oracle.eval_many(piece), 0.0)
    return int(np.sum(oracle.eval_many(S) > total + tol))


def decreasing_marginal_violations(oracle, trials, seed, tol=1e-9) -> int:
    """S, T1 ⊆ T2 with S ∩ T2 = ∅ but f_{T2}(S) > f_{T1}(S) + tol."""
    rng = np.random.default_rng(seed)
    n = oracle.n
    role = rng.integers(0, 3, size=(trials, n))      # 0: S, 1: T2 only, 2: neither
    S = role == 0
    T2 = role == 1
    T1 = T2 & _random_masks(rng, trials, n)
    f = oracle.eval_many
    m2 = f(S | T2) - f(T2)
    m1 = f(S | T1) - f(T1)
    return int(np.sum(m2 > m1 + tol))


def partition_marginal_violations(oracle, trials, seed, max_parts=4, tol=1e-9) -> int:
    """Partitions S = ∪S_i with f(S) < Σ f_{S∖S_i}(S_i) - tol."""
    rng = np.random.default_rng(seed)
    S = _random_masks(rng, trials, oracle.n)
    labels, parts = _random_partition_labels(rng, trials, oracle.n, max_parts)
    f = oracle.eval_many
    fS = f(S)
    total = np.zeros(trials)
    for j in range(max_parts):
        rest = S & (labels != j)
        total += np.where(j < parts, fS - f(rest), 0.0)
    return int(np.sum(fS < total - tol))


def masks_within(inst: Instance, masks: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Row-wise exact test of ``c(S) <= scale * L`` in every dimension.

    A float product screens the rows; only rows within a relative 1e-12 of
    a budget are re-checked with exact summation.
    """
    masks = np.asarray(masks, dtype=bool)
    loads = masks.astype(float) @ inst.exact_cost.T
    bud = scale * np.array([math.fsum(t) for t in inst.budget_terms])
    hi = loads <= bud * (1 + 1e-12)
    lo = loads <= bud * (1 - 1e-12)
    ok = np.all(hi, axis=1)
    for k in np.flatnonzero(ok & ~np.all(lo, axis=1)):
        members = np.flatnonzero(masks[k])
        ok[k] = all(within_budget(inst, members, r, scale) for r in range(inst.d))
    return ok
