"""Rank-k solutions of first-order quasilinear hyperbolic systems via Riemann invariants."""

from .catalog import get_entry, list_catalog
from .engine import (
    EvalOptions,
    EvaluationResult,
    ImplicitSolution,
    Profile,
    analytic_jacobian,
    evaluate,
    integrate_rank1_profile,
    phi_matrices,
    solution_rank,
)
from .errors import (
    AmbiguousKernelError,
    DomainError,
    InconsistentProfileError,
    InvalidInputError,
    KernelLostError,
    NoConvergenceError,
    NotFoundError,
    Phi1SingularError,
    RankSolutionsError,
    SingularMatrixError,
    SingularPiError,
    StencilError,
)
from .system import QuasilinearSystem, characteristic_matrix, wave_relation_kernel
from .verification import GridSpec, catastrophe_scan, pde_residual, verify_solution
from .waves import WaveVectorFamily, xi_from_pi

__version__ = "0.1.0"

__all__ = [
    "get_entry",
    "list_catalog",
    "EvalOptions",
    "EvaluationResult",
    "ImplicitSolution",
    "Profile",
    "analytic_jacobian",
    "evaluate",
    "integrate_rank1_profile",
    "phi_matrices",
    "solution_rank",
    "AmbiguousKernelError",
    "DomainError",
    "InconsistentProfileError",
    "InvalidInputError",
    "KernelLostError",
    "NoConvergenceError",
    "NotFoundError",
    "Phi1SingularError",
    "RankSolutionsError",
    "SingularMatrixError",
    "SingularPiError",
    "StencilError",
    "QuasilinearSystem",
    "characteristic_matrix",
    "wave_relation_kernel",
    "GridSpec",
    "catastrophe_scan",
    "pde_residual",
    "verify_solution",
    "WaveVectorFamily",
    "xi_from_pi",
]
