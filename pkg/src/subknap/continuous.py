"""Fractional solvers for max F(y) over the knapsack polytope.

These fill the "continuous algorithm" slot of the rounding framework.  Any
callable ``(Instance, seed) -> point`` can be registered under a name and
then used by the solve drivers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from .core import Instance, point_within_budget
from .errors import CapacityError, ConfigurationError, InputError
from .multilinear import (
    EXACT_SUPPORT_MAX,
    fractional_support,
    multilinear_value,
    multilinear_values,
    sample_masks,
    sample_values,
    snap,
)

log = logging.getLogger(__name__)

GRID_MAX_POINTS = 10 ** 7
IMPROVEMENT_TOL = 1e-9
_GRID_CHUNK = 1 << 15


@dataclass(frozen=True)
class ContinuousSolverConfig:
    method: str = "greedy"          # greedy | local_search | grid
    steps: int = 100
    samples: int = 1000
    resolution: float = 0.25
    restarts: int = 4
    seed: int = 0
    exact: bool | None = None       # None: exact marginals whenever affordable

    def __post_init__(self):
        if self.method not in ("greedy", "local_search", "grid"):
            raise ConfigurationError(f"unknown continuous method {self.method!r}")
        if self.steps < 1:
            raise ConfigurationError("steps must be at least 1")
        if self.samples < 2:
            raise ConfigurationError("samples must be at least 2")
        if self.restarts < 1:
            raise ConfigurationError("restarts must be at least 1")
        grid_size(self.resolution)


def grid_size(resolution: float) -> int:
    """Number of grid intervals for a resolution 1/m, m in 2..16."""
    m = int(round(1.0 / resolution))
    if not 2 <= m <= 16 or abs(1.0 / m - resolution) > 1e-12:
        raise ConfigurationError(f"grid resolution must be 1/m for m in 2..16, got {resolution}")
    return m


def contains(inst: Instance, y) -> bool:
    """Membership in the polytope, compared exactly."""
    y = np.asarray(y, dtype=float)
    if y.shape != (inst.n,) or np.any(y < 0) or np.any(y > 1):
        return False
    return point_within_budget(inst, y)


def fit_into_polytope(inst: Instance, y) -> np.ndarray:
    """Shrink ``y`` until it passes the exact membership test."""
    y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
    y[~inst.active] = 0.0
    for r in range(inst.d):
        if inst.budget[r] <= 0:
            y[inst.cost[r] > 0] = 0.0
    while not point_within_budget(inst, y):
        loads = inst.cost @ y
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(loads > 0, inst.budget / loads, 1.0)
        factor = min(1.0, float(ratios.min())) * (1.0 - 1e-12)
        y = y * factor
    return y


# ---------------------------------------------------------------------------
# continuous greedy
# ---------------------------------------------------------------------------

def _use_exact(inst, cfg):
    if cfg.exact is not None:
        return cfg.exact
    return inst.oracle.has_closed_form or int(inst.active.sum()) <= EXACT_SUPPORT_MAX


def _exact_gains(inst, y, active):
    idx = np.flatnonzero(active)
    Y = np.repeat(y[None, :], idx.shape[0] + 1, axis=0)
    Y[np.arange(1, idx.shape[0] + 1), idx] = 1.0
    vals = multilinear_values(inst, Y)
    gains = np.zeros(inst.n)
    gains[idx] = vals[1:] - vals[0]
    return gains


def _sampled_gains(inst, y, active, samples, rng):
    masks = sample_masks(y, samples, rng)
    base = inst.oracle.eval_many(masks)
    gains = np.zeros(inst.n)
    for i in np.flatnonzero(active):
        up = masks.copy()
        up[:, i] = True
        gains[i] = float(np.mean(inst.oracle.eval_many(up) - base))
    return gains


def best_direction(inst: Instance, weights) -> np.ndarray:
    """A vertex of the polytope maximising ``weights · v`` (non-negative weights only)."""
    w = np.where(inst.active, np.maximum(np.asarray(weights, dtype=float), 0.0), 0.0)
    candidates = np.flatnonzero(inst.active)
    v = np.zeros(inst.n)
    if candidates.size == 0:
        return v
    C = inst.cost[:, candidates]
    if np.all(C.sum(axis=1) <= inst.budget):
        v[candidates] = 1.0
        return v
    if inst.d == 1:
        return _fractional_knapsack(inst, w, candidates)
    res = linprog(-w[candidates], A_ub=C, b_ub=inst.budget,
                  bounds=[(0.0, 1.0)] * candidates.size, method="highs")
    if res.status != 0:
        raise ConfigurationError(f"direction LP failed: {res.message}")
    v[candidates] = np.clip(res.x, 0.0, 1.0)
    return fit_into_polytope(inst, v)    # HiGHS works to a small feasibility tolerance


def _fractional_knapsack(inst, w, candidates):
    c = inst.cost[0]
    v = np.zeros(inst.n)
    free = [i for i in candidates if c[i] == 0]
    v[free] = 1.0
    paid = [i for i in candidates if c[i] > 0]
    paid.sort(key=lambda i: (-w[i] / c[i], i))
    room = float(inst.budget[0])
    for i in paid:
        if room <= 0:
            break
        take = min(1.0, room / c[i])
        v[i] = take
        room -= take * c[i]
    return v


def continuous_greedy(inst: Instance, cfg: ContinuousSolverConfig | None = None) -> np.ndarray:
    """Move along the best feasible direction of the estimated gains, 1/steps at a time."""
    cfg = cfg or ContinuousSolverConfig()
    if not inst.oracle.monotone:
        raise ConfigurationError("continuous greedy needs a monotone objective; "
                                 "use local_search instead")
    exact = _use_exact(inst, cfg)
    active = inst.active
    y = np.zeros(inst.n)
    step = 1.0 / cfg.steps
    for t in range(cfg.steps):
        if exact:
            gains = _exact_gains(inst, y, active)
        else:
            rng = np.random.default_rng([cfg.seed, t])
            gains = _sampled_gains(inst, y, active, cfg.samples, rng)
        y = np.minimum(y + step * best_direction(inst, gains), 1.0)
    # steps of 1/steps do not add up to exactly 1 in floating point
    return fit_into_polytope(inst, snap(y))


# ---------------------------------------------------------------------------
# local search on a grid
# ---------------------------------------------------------------------------

class _Evaluator:
    def __init__(self, inst, cfg):
        self.inst = inst
        self.cfg = cfg
        self.exact = inst.oracle.has_closed_form or int(inst.active.sum()) <= 12

    def __call__(self, Y):
        if self.exact:
            return multilinear_values(self.inst, Y)
        return np.array([sample_values(self.inst, row, self.cfg.samples, self.cfg.seed).mean()
                         for row in np.atleast_2d(Y)])


def _feasible_rows(inst, Y):
    loads = Y @ inst.cost.T
    ok = np.all(loads <= inst.budget * (1 + 1e-12) + 1e-300, axis=1)
    border = ok & np.any(loads > inst.budget * (1 - 1e-12), axis=1)
    for k in np.flatnonzero(border):
        ok[k] = point_within_budget(inst, Y[k])
    return ok


def _random_grid_start(inst, m, rng):
    idx = np.flatnonzero(inst.active)
    levels = np.zeros(inst.n, dtype=np.int64)
    levels[idx] = rng.integers(0, m + 1, size=idx.size)
    while not point_within_budget(inst, levels / m):
        nz = np.flatnonzero(levels)
        levels[rng.choice(nz)] -= 1
    return levels


def _neighbours(levels, active_idx, m):
    out = []
    for i in active_idx:
        for g in range(m + 1):
            if g != levels[i]:
                nb = levels.copy()
                nb[i] = g
                out.append(nb)
    return out


def _exchanges(levels, active_idx, m):
    out = []
    for i in active_idx:
        if levels[i] == m:
            continue
        for j in active_idx:
            if j != i and levels[j] > 0:
                nb = levels.copy()
                nb[i] += 1
                nb[j] -= 1
                out.append(nb)
    return out


def local_search_fractional(inst: Instance, cfg: ContinuousSolverConfig | None = None,
                            max_moves: int = 10_000) -> np.ndarray:
    """Best-improvement hill climbing over grid points of the polytope.

    Moves are single-coordinate resets to any grid level, falling back to
    one-step exchanges between two coordinates when no reset improves.
    """
    cfg = cfg or ContinuousSolverConfig(method="local_search")
    m = grid_size(cfg.resolution)
    active_idx = np.flatnonzero(inst.active)
    evaluate = _Evaluator(inst, cfg)
    rng = np.random.default_rng(cfg.seed)
    best_y, best_val = np.zeros(inst.n), -np.inf
    for restart in range(cfg.restarts):
        levels = np.zeros(inst.n, dtype=np.int64) if restart == 0 \
            else _random_grid_start(inst, m, rng)
        current = float(evaluate(levels[None, :] / m)[0])
        for _ in range(max_moves):
            moved = False
            for generate in (_neighbours, _exchanges):
                cand = generate(levels, active_idx, m)
                if not cand:
                    continue
                L = np.array(cand)
                Y = L / m
                ok = _feasible_rows(inst, Y)
                if not ok.any():
                    continue
                vals = np.full(len(cand), -np.inf)
                vals[ok] = evaluate(Y[ok])
                k = int(np.argmax(vals))
                if vals[k] > current + IMPROVEMENT_TOL:
                    levels, current, moved = L[k], float(vals[k]), True
                    break
            if not moved:
                break
        if current > best_val:
            best_y, best_val = levels / m, current
    return fit_into_polytope(inst, best_y)


# ---------------------------------------------------------------------------
# exhaustive grid search
# ---------------------------------------------------------------------------

def grid_bruteforce(inst: Instance, resolution: float = 0.25) -> np.ndarray:
    """Exact maximiser of F over the grid points of the polytope (first in scan order)."""
    m = grid_size(resolution)
    idx = np.flatnonzero(inst.active)
    total = (m + 1) ** idx.size
    if total > GRID_MAX_POINTS:
        raise CapacityError(f"grid has {total} points, limit is {GRID_MAX_POINTS}")
    radix = (m + 1) ** np.arange(idx.size, dtype=np.int64)
    best_y, best_val = np.zeros(inst.n), -np.inf
    for lo in range(0, total, _GRID_CHUNK):
        codes = np.arange(lo, min(total, lo + _GRID_CHUNK), dtype=np.int64)
        Y = np.zeros((codes.size, inst.n))
        Y[:, idx] = ((codes[:, None] // radix[None, :]) % (m + 1)) / m
        ok = _feasible_rows(inst, Y)
        if not ok.any():
            continue
        rows = np.flatnonzero(ok)
        vals = multilinear_values(inst, Y[rows])
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_y = float(vals[k]), Y[rows[k]].copy()
    return best_y


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

SolverFn = Callable[[Instance, int], np.ndarray]
_REGISTRY: dict[str, Callable[..., SolverFn]] = {}


def register_solver(name: str, fn: SolverFn, *, factory: bool = False) -> None:
    """Register ``fn(inst, seed) -> point`` (or a factory taking options) under ``name``."""
    _REGISTRY[name] = fn if factory else (lambda **_: fn)


def solver_names() -> list[str]:
    return sorted(_REGISTRY)


def make_solver(name, **options) -> SolverFn:
    if callable(name):
        return name
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ConfigurationError(f"unknown continuous solver {name!r}; "
                                 f"known: {', '.join(solver_names())}") from None
    return factory(**{k: v for k, v in options.items() if v is not None})


def _greedy_factory(steps=100, samples=1000, exact=None, **_):
    def solve(inst, seed):
        return continuous_greedy(inst, ContinuousSolverConfig(
            "greedy", steps=steps, samples=samples, seed=seed, exact=exact))
    return solve


def _local_factory(resolution=0.25, restarts=4, samples=1000, **_):
    def solve(inst, seed):
        return local_search_fractional(inst, ContinuousSolverConfig(
            "local_search", resolution=resolution, restarts=restarts,
            samples=samples, seed=seed))
    return solve


def _grid_factory(resolution=0.25, **_):
    def solve(inst, seed):
        return grid_bruteforce(inst, resolution)
    return solve


register_solver("greedy", _greedy_factory, factory=True)
register_solver("local_search", _local_factory, factory=True)
register_solver("grid", _grid_factory, factory=True)


def check_solver_output(inst: Instance, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (inst.n,):
        raise InputError(f"solver returned a point of shape {y.shape}, expected ({inst.n},)")
    if not contains(inst, y):
        raise InputError("solver returned a point outside the polytope")
    if np.any(y[~inst.active] > 0):
        raise InputError("solver put mass on elements outside the universe")
    return y


__all__ = [
    "ContinuousSolverConfig", "contains", "continuous_greedy", "local_search_fractional",
    "grid_bruteforce", "register_solver", "make_solver", "solver_names", "fit_into_polytope",
    "best_direction", "check_solver_output", "fractional_support",
]
