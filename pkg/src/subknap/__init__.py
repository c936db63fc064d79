"""Submodular maximization under multiple knapsack constraints."""

from .core import (
    CoverageOracle,
    CutOracle,
    FeasibilityClass,
    Instance,
    ModularOracle,
    SolutionSet,
    SubmodularOracle,
    TableOracle,
    classify,
    cost_of_point,
    cost_of_set,
    evaluate,
    is_feasible,
    is_small,
    marginal,
    solution,
)
from .errors import (
    CapacityError,
    ConfigurationError,
    InputError,
    PreconditionError,
    SolverError,
    SubknapError,
)
from .multilinear import (
    Estimate,
    coverage_multilinear,
    delta_bounds,
    multilinear_estimate,
    multilinear_exact,
    multilinear_value,
    pipage_point,
)
from .continuous import (
    ContinuousSolverConfig,
    contains,
    continuous_greedy,
    grid_bruteforce,
    local_search_fractional,
    make_solver,
    register_solver,
)
from .rounding import filter_nearly_feasible, fix_nearly_feasible, round_no_big, sample_round
from .enumeration import guess_sets, residual, solve_randomized
from .derandomize import (
    double_reduce,
    enumerate_realizations,
    pipage_reduce,
    quantize,
    round_deterministic,
    solve_deterministic,
)
from .bruteforce import exact_opt, exact_rounding_distribution
from .report import RunReport

__version__ = "0.1.0"
