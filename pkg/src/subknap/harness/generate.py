"""Seeded instance generators for the coverage, cut and modular families."""

from __future__ import annotations

import numpy as np

from ..core import CoverageOracle, CutOracle, Instance, ModularOracle
from ..errors import InputError

KINDS = ("coverage", "cut", "modular")

_DEFAULTS = {
    "coverage": {"n_sets": 8, "n_items": 12, "density": 0.3, "profit_range": [1, 10]},
    "cut": {"n_vertices": 8, "edge_prob": 0.5, "weight_range": [1, 5], "directed": False},
    "modular": {"n": 8, "weight_range": [1, 10]},
}
_COMMON = {"d": 1, "budget": 1.0, "cost_range": [0.1, 0.6],
           "small_eps": None, "small_fraction": 1.0}


def _int_range(rng, bounds, size):
    lo, hi = int(bounds[0]), int(bounds[1])
    if lo < 0 or hi < lo:
        raise InputError(f"invalid integer range {bounds}")
    return rng.integers(lo, hi + 1, size=size).astype(float)


def _costs(rng, n, p):
    d = int(p["d"])
    lo, hi = map(float, p["cost_range"])
    if d < 1 or lo < 0 or hi < lo:
        raise InputError("cost parameters must satisfy d >= 1 and 0 <= low <= high")
    budget = float(p["budget"])
    if budget <= 0:
        raise InputError("budget must be positive")
    cost = rng.uniform(lo, hi, size=(d, n)) * budget
    if p["small_eps"] is not None:
        eps = float(p["small_eps"])
        if not 0 < eps < 1:
            raise InputError("small_eps must lie in (0, 1)")
        small = rng.random(n) < float(p["small_fraction"])
        cap = eps ** 3 * budget
        cost[:, small] = rng.uniform(0.1, 1.0, size=(d, int(small.sum()))) * cap
    return cost, np.full(d, budget)


def generate(kind: str, params: dict | None = None, seed: int = 0) -> Instance:
    """Build a random instance; identical (kind, params, seed) give identical instances.

    ``small_eps`` switches on small-element mode: a ``small_fraction`` share of
    the elements get costs at most ``small_eps**3`` times the budget.
    """
    if kind not in KINDS:
        raise InputError(f"unknown generator kind {kind!r}; choose from {KINDS}")
    params = dict(params or {})
    unknown = set(params) - set(_DEFAULTS[kind]) - set(_COMMON)
    if unknown:
        raise InputError(f"unknown parameters for {kind}: {sorted(unknown)}")
    p = {**_COMMON, **_DEFAULTS[kind], **params}
    rng = np.random.default_rng(seed)
    if kind == "coverage":
        n, m = int(p["n_sets"]), int(p["n_items"])
        if n < 0 or m < 0 or not 0 <= float(p["density"]) <= 1:
            raise InputError("coverage needs n_sets, n_items >= 0 and density in [0, 1]")
        adj = rng.random((n, m)) < float(p["density"])
        profits = _int_range(rng, p["profit_range"], m)
        oracle = CoverageOracle([np.flatnonzero(row).tolist() for row in adj], profits)
    elif kind == "cut":
        n = int(p["n_vertices"])
        prob = float(p["edge_prob"])
        if n < 0 or not 0 <= prob <= 1:
            raise InputError("cut needs n_vertices >= 0 and edge_prob in [0, 1]")
        directed = bool(p["directed"])
        edges = []
        for u in range(n):
            for v in range(n) if directed else range(u + 1, n):
                if u != v and rng.random() < prob:
                    edges.append([u, v, float(_int_range(rng, p["weight_range"], 1)[0])])
        oracle = CutOracle(n, edges, directed)
    else:
        n = int(p["n"])
        if n < 0:
            raise InputError("modular needs n >= 0")
        oracle = ModularOracle(_int_range(rng, p["weight_range"], n))
    cost, budget = _costs(rng, n, p)
    inst = Instance(cost, budget, oracle, name=f"{kind}-{seed}")
    inst.metadata = {"name": inst.name, "seed": int(seed),
                     "generator": {"kind": kind, "params": params}}
    return inst
