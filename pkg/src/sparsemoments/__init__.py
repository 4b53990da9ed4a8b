"""Exact recovery of sparse measures from generalized moments."""

from .bp_solver import (
    BasisPursuitProblem,
    RecoveryResult,
    SolverOptions,
    Status,
    solve_bp,
    solve_gme_on_grid,
)
from .certificate import (
    DualCertificate,
    build_l2_sign_interpolant,
    build_nonnegative_dual,
    check_weak_nullspace_instance,
    delta_degree_bound,
    verify_dual_polynomial,
)
from .chebyshev import (
    ChebyshevResult,
    chebyshev_measure_support,
    classical_T,
    extrema_sets,
    generalized_chebyshev,
)
from .errors import CapacityError, DomainError, NumericalFailure
from .measures import (
    DiscreteMeasure,
    JordanSupport,
    MomentVector,
    jordan_decompose,
    moments,
    tv_norm,
)
from .msystem import FunctionFamily, VandermondeMatrix, has_full_column_rank, index, vandermonde

__version__ = "0.1.0"

__all__ = [
    "BasisPursuitProblem",
    "CapacityError",
    "ChebyshevResult",
    "DiscreteMeasure",
    "DomainError",
    "DualCertificate",
    "FunctionFamily",
    "JordanSupport",
    "MomentVector",
    "NumericalFailure",
    "RecoveryResult",
    "SolverOptions",
    "Status",
    "VandermondeMatrix",
    "build_l2_sign_interpolant",
    "build_nonnegative_dual",
    "check_weak_nullspace_instance",
    "chebyshev_measure_support",
    "classical_T",
    "delta_degree_bound",
    "extrema_sets",
    "generalized_chebyshev",
    "has_full_column_rank",
    "index",
    "jordan_decompose",
    "moments",
    "solve_bp",
    "solve_gme_on_grid",
    "tv_norm",
    "vandermonde",
    "verify_dual_polynomial",
]
