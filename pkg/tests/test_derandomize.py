import math

import numpy as np
import pytest

from subknap import (
    CapacityError,
    CoverageOracle,
    Instance,
    ModularOracle,
    PreconditionError,
    double_reduce,
    enumerate_realizations,
    is_feasible,
    pipage_reduce,
    quantize,
    round_deterministic,
    solve_deterministic,
)
from subknap import derandomize as dr
from subknap.core import cost_of_point
from subknap.harness.generate import generate
from subknap.multilinear import fractional_support, multilinear_value
from subknap.rounding import filter_nearly_feasible, fix_nearly_feasible

from conftest import modular_instance


# -- quantization ---------------------------------------------------------------------

def test_quantize_frozen_ladder():
    inst = modular_instance([1, 1, 1, 1], [0.0, 0.05, 0.1, 0.11])
    q = quantize(inst, [0.5] * 4, 0.5, k=4)
    # threshold eps L / 2k = 0.0625, ratio 1.25
    assert q.cost[0, 0] == 0.0
    assert q.cost[0, 1] == 0.0
    assert q.cost[0, 2] == pytest.approx(0.09765625, abs=1e-15)
    assert q.keys[2] == (2,)
    assert q.keys[0] == q.keys[1] == (-1,)
    assert q.cost[0, 3] == q.cost[0, 2]


def test_quantize_invariants(rng):
    eps = 0.4
    inst = generate("coverage", {"n_sets": 30, "d": 2, "small_eps": eps}, 2)
    y = rng.random(inst.n)
    q = quantize(inst, y, eps)
    k = len(fractional_support(y))
    for i in q.support:
        for r in range(inst.d):
            c, cq = inst.cost[r, i], q.cost[r, i]
            assert cq <= c
            assert c <= (1 + eps / 2) * cq + eps / (2 * k) + 1e-15
    assert q.distinct_keys() <= q.bound


def test_quantize_rejects_big_support():
    inst = modular_instance([1, 1], [0.5, 0.01])
    with pytest.raises(PreconditionError):
        quantize(inst, [0.5, 0.5], 0.3)


def test_ladder_level_boundaries():
    assert dr.ladder_level(0.0625 * 1.25 ** 3, 0.0625, 1.25) == 3
    assert dr.ladder_level(0.0625 * 1.25 ** 3 * (1 - 1e-15), 0.0625, 1.25) == 2


# -- pipage ------------------------------------------------------------------------------

def test_pipage_unchanged_when_classes_are_singletons():
    # with k = 8 the zero class ends at 0.5 / 16, so the two costs get different keys
    inst = modular_instance([1, 1], [0.01, 0.1])
    y, trace = pipage_reduce(inst, [0.5, 0.5], 0.5, k=8)
    assert y.tolist() == [0.5, 0.5]
    assert trace.steps == []


def test_pipage_modular_picks_heavier_endpoint():
    inst = modular_instance([1, 2], [0.1, 0.1])
    y, trace = pipage_reduce(inst, [0.5, 0.5], 0.5)
    assert y.tolist() == [0.0, 1.0]
    step = trace.steps[0]
    assert (step.f_before, step.f_after, step.f_other) == (1.5, 2.0, 1.0)


def test_pipage_tie_goes_to_plus_endpoint():
    inst = modular_instance([1, 1], [0.1, 0.1])
    y, _ = pipage_reduce(inst, [0.5, 0.5], 0.5)
    assert y.tolist() == [1.0, 0.0]


def test_pipage_single_class_leaves_one_fractional():
    n = 10
    inst = Instance([np.full(n, 0.1)], [1.0], generate("coverage", {"n_sets": n}, 0).oracle)
    y, trace = pipage_reduce(inst, np.full(n, 0.35), 0.5)
    assert len(fractional_support(y)) == 1
    assert trace.final_fractional == 1
    assert y.sum() == pytest.approx(3.5)


def test_pipage_trace_invariants(rng):
    eps = 0.3
    for seed in range(5):
        inst = generate("coverage", {"n_sets": 25, "small_eps": eps}, seed)
        y0 = rng.random(inst.n)
        y0 *= min(1.0, 1.0 / float(inst.cost[0] @ y0))
        y, trace = pipage_reduce(inst, y0, eps)
        q = trace.quantized
        for step in trace.steps:
            assert step.f_after >= step.f_before - 1e-9
            assert step.f_after >= step.f_other - 1e-9
            assert step.quantized_cost == trace.initial_quantized_cost
        frac = [i for i in q.support if 0 < y[i] < 1]
        assert len({q.keys[i] for i in frac}) == len(frac)
        assert len(frac) <= q.bound
        assert np.all(cost_of_point(inst, y) <= (1 + eps) * inst.budget + 1e-9)


def test_pipage_estimator_path_keeps_invariants():
    # 21 fractional entries and no closed form: the paired estimator decides each step
    n = 21
    cov = generate("coverage", {"n_sets": n, "n_items": 8}, 1).oracle

    class Hidden(CoverageOracle):
        has_closed_form = False

    hidden = Hidden([list(s) for s in cov.sets], cov.profits)
    inst = Instance([np.full(n, 0.01)], [1.0], hidden)
    y, trace = pipage_reduce(inst, np.full(n, 0.5), 0.5, seed=3)
    assert len(fractional_support(y)) <= 1
    assert trace.steps and all(s.quantized_cost == trace.initial_quantized_cost
                               for s in trace.steps)


def test_double_reduce_integral_unchanged():
    inst = modular_instance([1, 2, 3], [0.01, 0.01, 0.01])
    y = np.array([1.0, 0.0, 1.0])
    np.testing.assert_array_equal(double_reduce(inst, y, 0.5), y)


def test_double_reduce_bounds(rng):
    eps = 0.5
    inst = generate("coverage", {"n_sets": 12, "small_eps": eps}, 4)
    y0 = rng.random(12)
    y, (t1, t2) = double_reduce(inst, y0, eps, traces=True)
    assert t1.final_fractional <= t1.quantized.bound
    assert t2.final_fractional <= (8 * math.log(2 * max(1, t1.final_fractional)) / eps)
    assert len(fractional_support(y)) <= 12
    assert np.all(cost_of_point(inst, y) <= (1 + eps) ** 2 * inst.budget + 1e-9)
    assert multilinear_value(inst, y) >= multilinear_value(inst, y0) - 1e-9


def test_bound_arithmetic_example():
    k1 = (8 * math.log(200) / 0.5)
    assert math.floor(k1) == 84
    assert math.floor(8 * math.log(2 * 84) / 0.5) == 81


# -- realizations --------------------------------------------------------------------------

def test_enumerate_realizations_examples():
    assert list(enumerate_realizations([1.0, 0.0, 1.0])) == [(0, 2)]
    assert len(list(enumerate_realizations([0.5, 0.5]))) == 4
    out = list(enumerate_realizations([0.5, 1.0, 0.5, 0.5]))
    assert out == [(1,), (0, 1), (1, 2), (0, 1, 2), (1, 3), (0, 1, 3), (1, 2, 3), (0, 1, 2, 3)]


def test_enumerate_realizations_capacity():
    with pytest.raises(CapacityError, match="26"):
        next(enumerate_realizations(np.full(26, 0.5)))


# -- deterministic rounding -----------------------------------------------------------------

def test_round_deterministic_integral_feasible():
    inst = modular_instance([1, 2, 3], [0.01, 0.01, 0.01])
    assert round_deterministic(inst, [1.0, 0.0, 1.0], 0.5).members == (0, 2)


def test_round_deterministic_is_deterministic(rng):
    inst = generate("coverage", {"n_sets": 12, "small_eps": 0.3}, 7)
    y = rng.random(12)
    assert round_deterministic(inst, y, 0.3) == round_deterministic(inst, y, 0.3)


def test_round_deterministic_beats_every_degenerate_realization(rng):
    eps = 0.3
    inst = generate("coverage", {"n_sets": 10, "small_eps": eps}, 3)
    y = rng.random(10)
    out, info = round_deterministic(inst, y, eps, details=True)
    assert is_feasible(inst, out.members)
    for D in enumerate_realizations(info["reduced"]):
        fixed = fix_nearly_feasible(inst, filter_nearly_feasible(inst, D, eps), eps)
        assert out.value >= fixed.value - 1e-9


def test_round_deterministic_rejects_big():
    inst = modular_instance([1, 1], [0.5, 0.01])
    with pytest.raises(PreconditionError):
        round_deterministic(inst, [0.5, 0.5], 0.3)


def test_solve_deterministic_two_equal_elements():
    inst = modular_instance([1, 2], [0.6, 0.6])
    S, rep = solve_deterministic(inst, "greedy", 0.3, 1)
    assert S.members == (1,)
    assert rep.algorithm == "deterministic"


def test_solve_deterministic_single_element():
    inst = Instance([[0.3]], [1.0], ModularOracle([2.0]))
    S, _ = solve_deterministic(inst, "greedy", 0.3, 1)
    assert S.members == (0,)


def test_solve_deterministic_identical_reports():
    inst = generate("coverage", {"n_sets": 9, "small_eps": 0.3, "small_fraction": 0.5}, 2)
    a = solve_deterministic(inst, "greedy", 0.3, 2)[1]
    b = solve_deterministic(inst, "greedy", 0.3, 2)[1]
    assert a.row(timing=False) == b.row(timing=False)
    assert a.frac_before is not None


def test_scaling_along_rays(rng):
    # F(c y) >= c F(y) for monotone submodular f (concavity along rays from 0)
    inst = generate("coverage", {"n_sets": 8}, 5)
    for _ in range(200):
        y = rng.random(8)
        c = float(rng.random())
        assert multilinear_value(inst, c * y) >= c * multilinear_value(inst, y) - 1e-9
