"""Pareto approximation for simultaneous constraint satisfaction (MaxCut, w-SAT, conjunctions)."""

from .core import (
    Clause,
    Cut,
    Instance,
    MultiInstance,
    PartialAssignment,
    Term,
    active_degree,
    active_degree_total,
    active_degrees,
    normalize,
    val_partial,
    value,
)
from .errors import InputError, InvariantViolation, ResourceError, SimulCSPError, SolverError
from .estimators import Params, ProductDistribution, meancalc, meanest, varcalc, varest
from .gen import gap_k_partition, gap_three_cycle, max1sat_geometric, random_generic, random_planted
from .reduce import GenericInstance, PredicateConstraint, reduce_multi, to_conj
from .solver_tree import default_params_conj, solve_conj, solve_max2and
from .solvers_set import SolveReport, default_params_maxcut, default_params_wsat, solve_maxcut, solve_wsat
from .verify import brute_force_opt_min, brute_force_pareto, check_solution, perturb

__version__ = "0.1.0"

__all__ = [
    "Clause", "Cut", "Instance", "MultiInstance", "PartialAssignment", "Term",
    "active_degree", "active_degree_total", "active_degrees", "normalize", "val_partial", "value",
    "InputError", "InvariantViolation", "ResourceError", "SimulCSPError", "SolverError",
    "Params", "ProductDistribution", "meancalc", "meanest", "varcalc", "varest",
    "gap_k_partition", "gap_three_cycle", "max1sat_geometric", "random_generic", "random_planted",
    "GenericInstance", "PredicateConstraint", "reduce_multi", "to_conj",
    "default_params_conj", "solve_conj", "solve_max2and",
    "SolveReport", "default_params_maxcut", "default_params_wsat", "solve_maxcut", "solve_wsat",
    "brute_force_opt_min", "brute_force_pareto", "check_solution", "perturb",
]
