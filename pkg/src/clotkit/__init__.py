"""Sparse recovery with combined l1/l2 and sparse-group-lasso penalties.

The toolkit covers the full loop: penalty definitions with exact proximal
maps, first-order solvers for the multiplier and noise-constrained program
forms, recovery certificates from restricted-isometry constants, the
deterministic low-coherence binary matrix construction, grouping-effect
verification on solved instances, and seeded reproductions of the standard
numerical studies.
"""

from .grouping import GroupingReport, Preprocessed, grouping_bound, grouping_check, preprocess
from .matrices import DeVoreParams, devore_matrix, devore_min_prime, fixture_matrix
from .regularizers import (
    Partition,
    PenaltyKind,
    RegularizerSpec,
    penalty_value,
    prox,
    sparsity_index,
)
from .rip import (
    Certificate,
    RipEstimate,
    certificate,
    delta_bound_from_mu,
    error_bounds,
    exact_rip,
    rnsp_check,
)
from .solvers import (
    Constrained,
    InfeasibleError,
    Lagrangian,
    Problem,
    SolveResult,
    SolverOptions,
    lambda_zero_threshold,
    solution_path,
    solve_constrained,
    solve_lagrangian,
)

__version__ = "0.1.0"

__all__ = [
    "Partition", "PenaltyKind", "RegularizerSpec", "penalty_value", "prox", "sparsity_index",
    "Problem", "Lagrangian", "Constrained", "SolverOptions", "SolveResult", "InfeasibleError",
    "solve_lagrangian", "solve_constrained", "solution_path", "lambda_zero_threshold",
    "Certificate", "certificate", "error_bounds", "delta_bound_from_mu",
    "RipEstimate", "exact_rip", "rnsp_check",
    "DeVoreParams", "devore_matrix", "devore_min_prime", "fixture_matrix",
    "Preprocessed", "preprocess", "GroupingReport", "grouping_check", "grouping_bound",
]
