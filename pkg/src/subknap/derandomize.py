"""Deterministic rounding: quantize costs, pipage-reduce, enumerate realizations.

Pipage arithmetic is carried out on exact rationals so that the quantized
cost of the point is preserved exactly and pipage endpoints are exactly
integral; F is evaluated on the float image of each point.
"""

from __future__ import annotations

import math
import time
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from .core import (
    FeasibilityClass,
    Instance,
    SolutionSet,
    classify,
    masks_from_codes,
    masks_within,
    small_mask,
    solution,
)
from .enumeration import default_h, guess_and_round
from .continuous import make_solver
from .errors import CapacityError, PreconditionError
from .multilinear import (
    EXACT_SUPPORT_MAX,
    as_point,
    fractional_support,
    integral_ones,
    multilinear_values,
    sample_values,
    snap,
)
from .report import RunReport
from .rounding import fix_nearly_feasible

REALIZATION_MAX_SUPPORT = 25
ESTIMATE_SAMPLES = 4000
ESTIMATE_CAP = 256_000
_CHUNK = 1 << 15


@dataclass(frozen=True)
class QuantizedCosts:
    cost: np.ndarray                 # d x n; real costs outside the support
    k: int
    eps: float
    support: tuple[int, ...]
    keys: dict                       # element -> tuple of ladder levels (-1 for zero)
    reference: np.ndarray

    @property
    def bound(self) -> float:
        return (8 * math.log(2 * self.k) / self.eps) ** self.cost.shape[0]

    def distinct_keys(self) -> int:
        return len(set(self.keys.values()))


def ladder_level(c: float, threshold: float, ratio: float) -> int:
    """Largest j with threshold * ratio**j <= c (c > threshold > 0)."""
    j = int(math.floor(math.log(c / threshold) / math.log(ratio)))
    while threshold * ratio ** (j + 1) <= c:
        j += 1
    while j > 0 and threshold * ratio ** j > c:
        j -= 1
    return j


def quantize(inst: Instance, y, eps: float, k: int | None = None,
             reference=None) -> QuantizedCosts:
    """Round support costs down to a geometric ladder starting at eps*L/(2k)."""
    y = np.asarray(y, dtype=float)
    support = fractional_support(y)
    small = small_mask(inst, eps)
    big = [i for i in support if not small[i]]
    if big:
        raise PreconditionError(f"elements {big} in the fractional support are big")
    k = max(1, len(support) if k is None else int(k))
    ref = inst.budget if reference is None else np.asarray(reference, dtype=float)
    ratio = 1.0 + eps / 2.0
    cost = inst.cost.copy()
    keys = {}
    for i in support:
        key = []
        for r in range(inst.d):
            threshold = eps * ref[r] / (2 * k)
            c = inst.cost[r, i]
            if c <= threshold:
                key.append(-1)
                cost[r, i] = 0.0
            else:
                j = ladder_level(c, threshold, ratio)
                key.append(j)
                cost[r, i] = threshold * ratio ** j
        keys[i] = tuple(key)
    return QuantizedCosts(cost, k, eps, support, keys, np.array(ref))


@dataclass(frozen=True)
class PipageStep:
    i: int
    j: int
    delta: float
    f_before: float
    f_after: float
    f_other: float
    quantized_cost: tuple     # exact rationals, one per dimension


@dataclass
class ReductionTrace:
    steps: list = field(default_factory=list)
    initial_quantized_cost: tuple = ()
    initial_fractional: int = 0
    final_point: np.ndarray | None = None
    final_fractional: int = 0
    quantized: QuantizedCosts | None = None


def _exact_quantized_cost(qcost, yf):
    out = []
    for r in range(qcost.shape[0]):
        total = Fraction(0)
        for c, v in zip(qcost[r].tolist(), yf):
            if c and v:
                total += Fraction(c) * v
        out.append(total)
    return tuple(out)


class _Comparator:
    """Evaluates F at pipage endpoints, exactly when possible."""

    def __init__(self, inst, seed, samples=ESTIMATE_SAMPLES, cap=ESTIMATE_CAP):
        self.inst, self.seed, self.samples, self.cap = inst, seed, samples, cap

    def values(self, Y):
        inst = self.inst
        if inst.oracle.has_closed_form or \
                max(len(fractional_support(row)) for row in Y) <= EXACT_SUPPORT_MAX:
            return multilinear_values(inst, Y), True
        return np.array([sample_values(inst, row, self.samples, self.seed).mean()
                         for row in Y]), False

    def prefer_plus(self, y_plus, y_minus):
        """Paired-sample comparison; falls back to δ⁺ when the margin is never met."""
        s = self.samples
        while True:
            diff = sample_values(self.inst, y_plus, s, self.seed) - \
                sample_values(self.inst, y_minus, s, self.seed)
            mean = diff.mean()
            se = diff.std(ddof=1) / math.sqrt(s)
            if abs(mean) > 3 * se:
                return mean > 0
            if s * 4 > self.cap:
                return True
            s *= 4


def _group_fractional(yf, keys):
    classes = defaultdict(list)
    for i, key in keys.items():
        if 0 < yf[i] < 1:
            classes[key].append(i)
    return classes


def pipage_reduce(inst: Instance, y, eps: float, k: int | None = None, reference=None,
                  seed: int = 0) -> tuple[np.ndarray, ReductionTrace]:
    """Merge fractional mass between elements of equal quantized cost.

    Each step moves along e_i − e_j to whichever end of the feasible segment
    has the larger F (δ⁺ on ties), so F never drops and the quantized cost
    vector is unchanged.
    """
    y = snap(as_point(y, inst.n))
    q = quantize(inst, y, eps, k, reference)
    yf = [Fraction(v) for v in y.tolist()]
    trace = ReductionTrace(quantized=q, initial_fractional=len(q.support))
    trace.initial_quantized_cost = _exact_quantized_cost(q.cost, yf)
    cmp = _Comparator(inst, seed)
    f_cur = None
    while True:
        classes = [c for c in _group_fractional(yf, q.keys).values() if len(c) >= 2]
        if not classes:
            break
        chosen = min(classes, key=lambda c: (-len(c), min(c)))
        i, j = sorted(chosen)[:2]
        hi = min(1 - yf[i], yf[j])
        lo = -min(yf[i], 1 - yf[j])
        plus, minus = list(yf), list(yf)
        plus[i], plus[j] = yf[i] + hi, yf[j] - hi
        minus[i], minus[j] = yf[i] + lo, yf[j] - lo
        rows = np.array([[float(v) for v in pt] for pt in (yf, plus, minus)])
        vals, exact = cmp.values(rows)
        if f_cur is None or not exact:
            f_cur = float(vals[0])
        take_plus = vals[1] >= vals[2] if exact else cmp.prefer_plus(rows[1], rows[2])
        yf = plus if take_plus else minus
        f_new, f_other = (vals[1], vals[2]) if take_plus else (vals[2], vals[1])
        trace.steps.append(PipageStep(i, j, float(hi if take_plus else lo), f_cur,
                                      float(f_new), float(f_other),
                                      _exact_quantized_cost(q.cost, yf)))
        f_cur = float(f_new)
    out = np.array([float(v) for v in yf])
    trace.final_point = out
    trace.final_fractional = len(fractional_support(out))
    return out, trace


def double_reduce(inst: Instance, y, eps: float, seed: int = 0, traces: bool = False):
    """Two pipage passes; the second is quantized for the first pass's survivors."""
    y = snap(as_point(y, inst.n))
    y1, t1 = pipage_reduce(inst, y, eps, seed=seed)
    y2, t2 = pipage_reduce(inst, y1, eps, k=max(1, t1.final_fractional),
                           reference=(1 + eps) * inst.budget, seed=seed)
    return (y2, [t1, t2]) if traces else y2


def enumerate_realizations(y, max_support: int = REALIZATION_MAX_SUPPORT
                           ) -> Iterator[tuple[int, ...]]:
    """Every outcome of D ~ y, fractional support taken in binary-counter order."""
    y = np.asarray(y, dtype=float)
    support = fractional_support(y)
    if len(support) > max_support:
        raise CapacityError(f"fractional support of size {len(support)} exceeds "
                            f"{max_support}; increase epsilon or use the randomized path")
    ones = [int(i) for i in np.flatnonzero(integral_ones(y))]
    for code in range(1 << len(support)):
        picked = [support[b] for b in range(len(support)) if code >> b & 1]
        yield tuple(sorted(ones + picked))


def _best_realization(inst, y, eps):
    support = fractional_support(y)
    if len(support) > REALIZATION_MAX_SUPPORT:
        raise CapacityError(f"fractional support of size {len(support)} exceeds "
                            f"{REALIZATION_MAX_SUPPORT}; increase epsilon or use the "
                            "randomized path")
    base = integral_ones(y)
    total = 1 << len(support)
    best_val, best_idx, best_set = -math.inf, -1, None
    nearly = []
    for lo in range(0, total, _CHUNK):
        codes = np.arange(lo, min(total, lo + _CHUNK), dtype=np.int64)
        masks = masks_from_codes(codes, support, inst.n, base)
        near = masks_within(inst, masks, 1.0 + eps)
        if not near.any():
            continue
        feas = near & masks_within(inst, masks, 1.0)
        vals = inst.oracle.eval_many(masks)
        if feas.any():
            k = int(np.flatnonzero(feas)[np.argmax(vals[feas])])
            if vals[k] > best_val:
                best_val, best_idx = float(vals[k]), lo + k
                best_set = tuple(int(i) for i in np.flatnonzero(masks[k]))
        for k in np.flatnonzero(near & ~feas):
            nearly.append((float(vals[k]), lo + int(k),
                           tuple(int(i) for i in np.flatnonzero(masks[k]))))
    if inst.oracle.monotone:
        # fixing never increases a monotone value, so order by the unfixed value
        nearly.sort(key=lambda t: (-t[0], t[1]))
    for val, idx, D in nearly:
        if inst.oracle.monotone and (val < best_val or (val == best_val and idx > best_idx)):
            break
        fixed = fix_nearly_feasible(inst, D, eps)
        if fixed.value > best_val or (fixed.value == best_val and idx < best_idx):
            best_val, best_idx, best_set = fixed.value, idx, fixed.members
    return best_set, total


def round_deterministic(inst: Instance, y, eps: float, details: bool = False, seed: int = 0):
    """Scale by (1+ε)⁻², reduce the fractional support, try every realization.

    Each nearly feasible realization is repaired by the fixing step and the
    most valuable feasible result is returned (∅ if there is none).
    """
    y = snap(as_point(y, inst.n))
    big = np.flatnonzero((y > 0) & ~small_mask(inst, eps))
    if big.size:
        raise PreconditionError(f"elements {big.tolist()} in the support are big")
    support = fractional_support(y)
    info = {"frac_before": len(support), "frac_after": len(support)}
    if not support and classify(inst, np.flatnonzero(y), eps) is FeasibilityClass.FEASIBLE:
        result = solution(inst, np.flatnonzero(y))
        return (result, info) if details else result
    scaled = y / (1.0 + eps) ** 2
    reduced, traces = double_reduce(inst, scaled, eps, seed=seed, traces=True)
    info = {"frac_before": len(fractional_support(scaled)),
            "frac_after": len(fractional_support(reduced)),
            "reduced": reduced, "traces": traces}
    best_set, _ = _best_realization(inst, reduced, eps)
    result = solution(inst, best_set if best_set is not None else ())
    return (result, info) if details else result


def solve_deterministic(inst: Instance, solver="greedy", eps: float = 0.3,
                        h: int | None = None, seed: int = 0,
                        solver_options: dict | None = None) -> tuple[SolutionSet, RunReport]:
    """The guessing loop with deterministic rounding on every residual."""
    h = default_h(inst.d, eps) if h is None else h
    fn = make_solver(solver, **(solver_options or {}))
    start = time.perf_counter()

    def rounder(res, y):
        out, info = round_deterministic(res, y, eps, details=True, seed=seed)
        return out, {"frac_before": info["frac_before"], "frac_after": info["frac_after"]}

    best, report = guess_and_round(inst, fn, eps, h, seed, rounder)
    report.algorithm = "deterministic"
    report.solver = solver if isinstance(solver, str) else getattr(solver, "__name__", "custom")
    report.wall_ms = (time.perf_counter() - start) * 1e3
    return best, report
