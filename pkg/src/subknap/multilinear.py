"""The extension by expectation F(y) = E[f(R)], R ~ y, and pipage moves.

Three evaluators are provided: exhaustive enumeration over the fractional
support, the per-oracle closed forms, and a seeded Monte Carlo estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CoverageOracle, Instance, masks_from_codes
from .errors import CapacityError, InputError

INTEGRALITY_TOL = 1e-12
EXACT_SUPPORT_MAX = 20
_CHUNK = 1 << 16


def as_point(y, n: int | None = None) -> np.ndarray:
    y = np.asarray(y, dtype=float).reshape(-1)
    if n is not None and y.shape[0] != n:
        raise InputError(f"point has {y.shape[0]} entries, expected {n}")
    if np.any(~np.isfinite(y)) or np.any(y < 0) or np.any(y > 1):
        raise InputError("point entries must lie in [0, 1]")
    return y


def integral_ones(y) -> np.ndarray:
    return np.abs(1.0 - np.asarray(y)) <= INTEGRALITY_TOL


def integral_zeros(y) -> np.ndarray:
    return np.abs(np.asarray(y)) <= INTEGRALITY_TOL


def fractional_support(y) -> tuple[int, ...]:
    y = np.asarray(y)
    frac = ~(integral_ones(y) | integral_zeros(y))
    return tuple(int(i) for i in np.flatnonzero(frac))


def snap(y) -> np.ndarray:
    """Round entries within the integrality tolerance to exactly 0 or 1."""
    y = np.array(y, dtype=float)
    y[integral_zeros(y)] = 0.0
    y[integral_ones(y)] = 1.0
    return y


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    samples: int


def realization_table(y, max_support: int = EXACT_SUPPORT_MAX):
    """Fractional support, base mask of integral ones, and subset probabilities.

    Realization ``m`` contains support element ``b`` iff bit ``b`` of ``m`` is set.
    """
    y = np.asarray(y, dtype=float)
    support = fractional_support(y)
    s = len(support)
    if s > max_support:
        raise CapacityError(f"fractional support {s} exceeds the limit of {max_support}")
    base = integral_ones(y)
    codes = np.arange(1 << s, dtype=np.int64)
    probs = np.ones(codes.shape[0])
    for b, i in enumerate(support):
        bit = ((codes >> b) & 1).astype(bool)
        probs *= np.where(bit, y[i], 1.0 - y[i])
    return support, base, codes, probs


def multilinear_exact(inst: Instance, y) -> float:
    """F(y) by summing over every subset of the fractional support."""
    y = as_point(y, inst.n)
    support, base, codes, probs = realization_table(y)
    total = 0.0
    for lo in range(0, codes.shape[0], _CHUNK):
        chunk = codes[lo:lo + _CHUNK]
        masks = masks_from_codes(chunk, support, inst.n, base)
        total += float(probs[lo:lo + _CHUNK] @ inst.oracle.eval_many(masks))
    return total


def coverage_multilinear(inst: Instance, y) -> float:
    """Σ_v p_v (1 − Π_{s ∋ v} (1 − y_s)) for coverage objectives."""
    if not isinstance(inst.oracle, CoverageOracle):
        raise InputError(f"closed form needs a coverage oracle, got {inst.oracle.kind}")
    y = as_point(y, inst.n)
    return float(inst.oracle.multilinear_batch(y[None, :])[0])


def has_exact_value(inst: Instance, y) -> bool:
    return inst.oracle.has_closed_form or len(fractional_support(y)) <= EXACT_SUPPORT_MAX


def multilinear_value(inst: Instance, y) -> float:
    """Exact F(y): closed form when the oracle has one, enumeration otherwise."""
    y = as_point(y, inst.n)
    if inst.oracle.has_closed_form:
        return float(inst.oracle.multilinear_batch(y[None, :])[0])
    return multilinear_exact(inst, y)


def multilinear_values(inst: Instance, Y) -> np.ndarray:
    """Exact F on every row of ``Y``."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if inst.oracle.has_closed_form:
        out = np.empty(Y.shape[0])
        for lo in range(0, Y.shape[0], 4096):
            out[lo:lo + 4096] = inst.oracle.multilinear_batch(Y[lo:lo + 4096])
        return out
    return np.array([multilinear_exact(inst, row) for row in Y])


def sample_masks(y, samples: int, rng: np.random.Generator) -> np.ndarray:
    """One uniform per element per sample, elements in index order."""
    y = np.asarray(y, dtype=float)
    return rng.random((samples, y.shape[0])) < y


def sample_values(inst: Instance, y, samples: int, seed) -> np.ndarray:
    """f(R_k) for ``samples`` independent draws R_k ~ y from one seeded stream."""
    y = as_point(y, inst.n)
    rng = np.random.default_rng(seed)
    out = np.empty(samples)
    for lo in range(0, samples, _CHUNK):
        k = min(_CHUNK, samples - lo)
        out[lo:lo + k] = inst.oracle.eval_many(sample_masks(y, k, rng))
    return out


def multilinear_estimate(inst: Instance, y, samples: int, seed) -> Estimate:
    if samples < 2:
        raise InputError("the estimator needs at least two samples")
    vals = sample_values(inst, y, samples, seed)
    return Estimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)), samples)


def delta_bounds(y, i: int, j: int) -> tuple[float, float]:
    """Range of δ keeping y + δ(e_i − e_j) inside the unit cube."""
    if i == j:
        raise InputError("pipage direction needs two distinct elements")
    y = np.asarray(y)
    return -min(y[i], 1.0 - y[j]), min(1.0 - y[i], y[j])


def pipage_point(y, i: int, j: int, delta: float) -> np.ndarray:
    lo, hi = delta_bounds(y, i, j)
    if not lo <= delta <= hi:
        raise InputError(f"delta {delta} outside the feasible interval [{lo}, {hi}]")
    out = np.array(y, dtype=float)
    if delta == hi:
        out[i], out[j] = (1.0, out[j] - (1.0 - out[i])) if hi == 1.0 - out[i] \
            else (out[i] + out[j], 0.0)
    elif delta == lo:
        out[i], out[j] = (0.0, out[j] + out[i]) if -lo == out[i] \
            else (out[i] - (1.0 - out[j]), 1.0)
    else:
        out[i] += delta
        out[j] -= delta
    return np.clip(out, 0.0, 1.0)
