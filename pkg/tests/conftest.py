import numpy as np
import pytest

from subknap import CoverageOracle, CutOracle, Instance, ModularOracle


@pytest.fixture
def two_set_coverage():
    """s0 -> {v0, v1}, s1 -> {v1, v2}, unit profits."""
    oracle = CoverageOracle([[0, 1], [1, 2]], [1.0, 1.0, 1.0])
    return Instance([[0.4, 0.4]], [1.0], oracle, name="two-set")


@pytest.fixture
def single_edge():
    return CutOracle(2, [[0, 1, 1.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def modular_instance(weights, costs, budget=1.0):
    costs = np.atleast_2d(np.asarray(costs, dtype=float))
    budget = np.broadcast_to(np.asarray(budget, dtype=float), (costs.shape[0],))
    return Instance(costs, budget, ModularOracle(weights))


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid:
                continue
            if outcome == "passed" and rep.when != "call":
                continue
            name = nodeid.split("::")[-1]
            notes = tuple(v for k, v in getattr(rep, "user_properties", ()) if k == "measured")
            lines.append((name, "PASS" if outcome == "passed" else "FAIL", notes))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, notes in sorted(set(lines)):
        terminalreporter.write_line(f"{status}  {name}")
        for note in notes:
            terminalreporter.write_line(f"        {note}")
