"""Exponential B-spline collocation for the time-fractional Black-Scholes equation."""

from .collocation import ProblemSpec, SolveResult, collocation_residual, solve
from .convergence import (
    EOCLadder,
    ErrorReport,
    amplification_margin,
    eoc_from_errors,
    eoc_ladder,
    error_norms,
    perturbation_growth,
    table_report,
)
from .errors import BasisRangeError, CompatibilityWarning, ContractError, DomainError, SolverError
from .l1_caputo import L1Weights, history_term, l1_weights
from .problems import (
    ManufacturedProblem,
    OptionModel,
    PriceSurface,
    example_problem,
    from_log_space,
    residual_check,
    to_log_space,
)
from .spline_basis import BasisConstants, SpatialGrid, basis_constants, evaluate_basis, reconstruct

__version__ = "0.1.0"
