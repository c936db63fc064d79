"""Exhaustive oracles used to check the solvers on small instances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Instance, masks_from_codes, masks_within
from .errors import CapacityError
from .multilinear import realization_table
from .rounding import fix_nearly_feasible

EXACT_OPT_MAX_N = 22
_CHUNK = 1 << 16


@dataclass(frozen=True)
class ExactResult:
    optimum_set: tuple[int, ...]
    optimum_value: float
    enumerated: int
    feasible: int


def exact_opt(inst: Instance) -> ExactResult:
    """Scan every subset of the active elements; ties go to the lexicographically smallest."""
    pool = [int(i) for i in np.flatnonzero(inst.active)]
    if len(pool) > EXACT_OPT_MAX_N:
        raise CapacityError(f"exact search supports n <= {EXACT_OPT_MAX_N}, got {len(pool)}")
    total = 1 << len(pool)
    best_val, tied = -np.inf, []
    n_feasible = 0
    for lo in range(0, total, _CHUNK):
        codes = np.arange(lo, min(total, lo + _CHUNK), dtype=np.int64)
        masks = masks_from_codes(codes, pool, inst.n)
        ok = masks_within(inst, masks)
        n_feasible += int(ok.sum())
        if not ok.any():
            continue
        vals = inst.oracle.eval_many(masks[ok])
        top = vals.max()
        rows = masks[ok][vals == top]
        sets = [tuple(int(i) for i in np.flatnonzero(r)) for r in rows]
        if top > best_val:
            best_val, tied = float(top), sets
        elif top == best_val:
            tied.extend(sets)
    return ExactResult(min(tied), best_val, total, n_feasible)


@dataclass(frozen=True)
class RoundingDistribution:
    expected_filtered: float          # E[f(D')]
    expected_unfiltered: float        # E[f(D)] = F(y)
    prob_not_nearly_feasible: float   # Pr[D is not eps-nearly feasible]
    prob_ratio_above: float           # Pr[max_r c_r(D)/L_r > ell]
    ell: float
    expected_fixed: float | None = None


def exact_rounding_distribution(inst: Instance, y, eps: float, ell: float = 2.0,
                                with_fix: bool = False) -> RoundingDistribution:
    """Exact law of the filtered draw, summed over all realizations of D ~ y."""
    y = np.asarray(y, dtype=float)
    support, base, codes, probs = realization_table(y)
    e_filt = e_all = p_bad = p_ell = e_fix = 0.0
    for lo in range(0, codes.shape[0], _CHUNK):
        chunk = codes[lo:lo + _CHUNK]
        p = probs[lo:lo + _CHUNK]
        masks = masks_from_codes(chunk, support, inst.n, base)
        vals = inst.oracle.eval_many(masks)
        near = masks_within(inst, masks, 1.0 + eps)
        e_all += float(p @ vals)
        e_filt += float(p[near] @ vals[near])
        p_bad += float(p[~near].sum())
        p_ell += float(p[~masks_within(inst, masks, ell)].sum())
        if with_fix:
            for k in np.flatnonzero(near):
                fixed = fix_nearly_feasible(inst, np.flatnonzero(masks[k]), eps)
                e_fix += float(p[k]) * fixed.value
    return RoundingDistribution(e_filt, e_all, p_bad, p_ell, ell,
                                e_fix if with_fix else None)
