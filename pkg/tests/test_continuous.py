import math

import numpy as np
import pytest

from subknap import (
    ConfigurationError,
    ContinuousSolverConfig,
    CapacityError,
    CoverageOracle,
    CutOracle,
    InputError,
    Instance,
    contains,
    continuous_greedy,
    grid_bruteforce,
    local_search_fractional,
    make_solver,
    multilinear_value,
    register_solver,
)
from subknap import continuous as cont
from subknap.harness.generate import generate

from conftest import modular_instance


def test_contains_examples(two_set_coverage):
    assert contains(two_set_coverage, [0.0, 0.0])
    assert contains(two_set_coverage, [1.0, 1.0])     # cost 0.8
    inst = modular_instance([1, 1], [1.0, 1.0])
    assert not contains(inst, [0.6, 0.6])
    assert not contains(inst, [-0.1, 0.0])
    assert not contains(inst, [0.5])


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ContinuousSolverConfig(steps=0)
    with pytest.raises(ConfigurationError):
        ContinuousSolverConfig(resolution=0.3)
    with pytest.raises(ConfigurationError):
        ContinuousSolverConfig(resolution=1 / 17)
    with pytest.raises(ConfigurationError):
        ContinuousSolverConfig(method="newton")
    assert cont.grid_size(1 / 16) == 16


# -- continuous greedy -----------------------------------------------------------------

def test_greedy_single_element():
    inst = Instance([[0.5]], [1.0], CoverageOracle([[0]], [1.0]))
    y = continuous_greedy(inst, ContinuousSolverConfig(steps=10))
    assert y.tolist() == [1.0]
    assert multilinear_value(inst, y) == 1.0


def test_greedy_saturates_when_everything_fits(two_set_coverage):
    y = continuous_greedy(two_set_coverage, ContinuousSolverConfig(steps=7))
    np.testing.assert_array_equal(y, [1.0, 1.0])


def test_greedy_rejects_non_monotone(single_edge):
    inst = Instance([[0.5, 0.5]], [1.0], single_edge)
    with pytest.raises(ConfigurationError):
        continuous_greedy(inst)


def test_greedy_output_in_polytope_and_reproducible():
    inst = generate("coverage", {"n_sets": 10, "d": 2}, 5)
    cfg = ContinuousSolverConfig(steps=20, samples=200, exact=False, seed=3)
    a = continuous_greedy(inst, cfg)
    b = continuous_greedy(inst, cfg)
    assert contains(inst, a)
    np.testing.assert_array_equal(a, b)


def test_greedy_modular_frozen_trajectory():
    # weights 3, 2, 1 with costs 0.5 each; the fractional optimum is 5.  Greedy
    # weighs each element by (1 - y_i) w_i and ends at a 1 - 1/e quality point.
    inst = modular_instance([3, 2, 1], [0.5, 0.5, 0.5])
    y = continuous_greedy(inst, ContinuousSolverConfig(steps=10))
    np.testing.assert_allclose(y, [0.9, 0.7, 0.4], atol=1e-12)
    assert multilinear_value(inst, y) >= (1 - 1 / math.e) * 5.0


def test_greedy_beats_half_of_grid_optimum():
    for seed in range(10):
        inst = generate("coverage", {"n_sets": 6, "n_items": 9}, seed)
        y = continuous_greedy(inst, ContinuousSolverConfig(steps=50))
        grid = grid_bruteforce(inst, 1 / 4)
        assert multilinear_value(inst, y) >= 0.5 * multilinear_value(inst, grid)


def test_greedy_value_is_not_monotone_in_steps():
    # More steps do not imply a better point: on this frozen instance the value
    # drops steadily.  Kept as a regression marker for the documented deviation.
    inst = generate("coverage", {"n_sets": 6, "n_items": 9}, 4)
    vals = [multilinear_value(inst, continuous_greedy(inst, ContinuousSolverConfig(steps=s)))
            for s in (1, 5, 100)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] >= 0.5 * multilinear_value(inst, grid_bruteforce(inst, 0.25))


def test_direction_lp_multi_dimensional():
    inst = modular_instance([1, 1, 5], [[0.6, 0.6, 0.5], [0.1, 0.1, 0.9]], [1.0, 1.0])
    v = cont.best_direction(inst, np.array([1.0, 1.0, 5.0]))
    assert contains(inst, v)
    assert v[2] == pytest.approx(1.0)


def test_fractional_knapsack_takes_free_elements_first():
    inst = modular_instance([1, 1, 1], [0.0, 2.0, 0.5])
    v = cont.best_direction(inst, np.array([0.1, 5.0, 1.0]))
    assert v[0] == 1.0
    assert contains(inst, v)


# -- local search ---------------------------------------------------------------------

def test_local_search_isolated_vertex():
    inst = Instance([[0.5]], [1.0], CutOracle(1, []))
    y = local_search_fractional(inst)
    assert contains(inst, y)
    assert multilinear_value(inst, y) == 0.0


def test_local_search_single_edge(single_edge):
    inst = Instance([[1.0, 1.0]], [1.0], single_edge)
    y = local_search_fractional(inst)
    assert contains(inst, y)
    assert multilinear_value(inst, y) >= 0.25


def test_local_search_modular_matches_fractional_knapsack():
    inst = modular_instance([4, 3, 1], [0.5, 0.5, 0.25])
    y = local_search_fractional(inst, ContinuousSolverConfig("local_search", resolution=0.25))
    assert multilinear_value(inst, y) == pytest.approx(7.0)


def test_local_search_on_grid_and_in_polytope():
    inst = generate("cut", {"n_vertices": 8, "d": 2}, 4)
    cfg = ContinuousSolverConfig("local_search", resolution=1 / 3, restarts=3, seed=2)
    y = local_search_fractional(inst, cfg)
    assert contains(inst, y)
    np.testing.assert_allclose(y * 3, np.round(y * 3), atol=1e-9)


# -- grid brute force ---------------------------------------------------------------------

def test_grid_modular_example():
    inst = modular_instance([2.0], [1.0], 0.6)
    y = grid_bruteforce(inst, 0.25)
    assert y.tolist() == [0.5]
    assert multilinear_value(inst, y) == 1.0


def test_grid_zero_profit_returns_origin():
    inst = Instance([[0.3, 0.3]], [1.0], CoverageOracle([[0], [0]], [0.0]))
    assert grid_bruteforce(inst, 0.5).tolist() == [0.0, 0.0]


def test_grid_is_argmax_over_grid():
    inst = Instance([[0.7, 0.6]], [1.0], CoverageOracle([[0, 1], [1, 2]], [1, 2, 3]))
    y = grid_bruteforce(inst, 0.25)
    best = multilinear_value(inst, y)
    for a in np.arange(5) / 4:
        for b in np.arange(5) / 4:
            if contains(inst, [a, b]):
                assert multilinear_value(inst, [a, b]) <= best


def test_grid_capacity_error():
    inst = modular_instance(np.ones(12), np.full(12, 0.01))
    with pytest.raises(CapacityError):
        grid_bruteforce(inst, 0.25)


# -- registry ------------------------------------------------------------------------------

def test_register_custom_solver(two_set_coverage):
    register_solver("zero-test", lambda inst, seed: np.zeros(inst.n))
    solve = make_solver("zero-test")
    assert solve(two_set_coverage, 0).tolist() == [0.0, 0.0]
    assert "zero-test" in cont.solver_names()


def test_unknown_solver():
    with pytest.raises(ConfigurationError):
        make_solver("simplex")


def test_check_solver_output_rejects_infeasible():
    inst = modular_instance([1, 1], [1.0, 1.0])
    with pytest.raises(InputError):
        cont.check_solver_output(inst, [0.9, 0.9])


def test_fit_into_polytope_shrinks():
    inst = modular_instance([1, 1], [1.0, 1.0])
    y = cont.fit_into_polytope(inst, [0.9, 0.9])
    assert contains(inst, y)
    assert y[0] == pytest.approx(0.5, rel=1e-9) and math.isclose(y[0], y[1])
