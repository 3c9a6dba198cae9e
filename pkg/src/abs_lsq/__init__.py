"""
abs-lsq
=======

Scaled ABS algorithms for linear least squares (Huang, modified Huang,
implicit QR and the least-squares Huang variants), dense QR / SVD baselines,
reproducible test problems and the benchmark suite that compares them.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .baselines import (
    SingularMatrixError,
    SvdConvergenceError,
    householder_qr,
    jacobi_svd,
    minimum_norm_solution,
    pivoted_qr_least_squares,
    qr_least_squares,
    svd_least_squares,
)
from .bench import SuiteConfig, SuiteConfigError, SuiteReport, SuiteRunner, write_outputs
from .engine import (
    AbsBreakdownError,
    AbsParameters,
    AbsState,
    MissingHistoryError,
    StepKind,
    TerminationStatus,
    abs_step,
    expand_abaffian,
    general_solution_point,
    huang_parameters,
    implicit_factorization_check,
    implicit_lu_parameters,
    implicit_qr_parameters,
    run_abs,
)
from .linalg import (
    DenseMatrix,
    DimensionError,
    LowerTriangular,
    SingularTriangularError,
    back_substitute,
    forward_substitute,
    matvec,
    matvec_transposed,
)
from .metrics import (
    BenchmarkRecorder,
    ErrorPair,
    Scoreboard,
    build_scoreboard,
    compute_errors,
    format_result_table,
    format_scoreboard,
    time_solver,
)
from .solvers import SolveResult, SolverKind, SolveStatus, huang_solve, implicit_qr_solve, ls_huang_solve, solve
from .testgen import (
    InstanceFormatError,
    MatrixFamily,
    MinstdRng,
    ProblemInstance,
    ProblemSpec,
    build_ls_problem,
    build_problem,
    dump_instance,
    generate_matrix,
    load_instance,
    perturb_cols,
    perturb_rows,
)

__all__ = [
    "__version__",
    "AbsBreakdownError",
    "AbsParameters",
    "AbsState",
    "BenchmarkRecorder",
    "DenseMatrix",
    "DimensionError",
    "ErrorPair",
    "InstanceFormatError",
    "LowerTriangular",
    "MatrixFamily",
    "MinstdRng",
    "MissingHistoryError",
    "ProblemInstance",
    "ProblemSpec",
    "Scoreboard",
    "SingularMatrixError",
    "SingularTriangularError",
    "SolveResult",
    "SolveStatus",
    "SolverKind",
    "StepKind",
    "SuiteConfig",
    "SuiteConfigError",
    "SuiteReport",
    "SuiteRunner",
    "SvdConvergenceError",
    "TerminationStatus",
    "abs_step",
    "back_substitute",
    "build_ls_problem",
    "build_problem",
    "build_scoreboard",
    "compute_errors",
    "dump_instance",
    "expand_abaffian",
    "format_result_table",
    "format_scoreboard",
    "forward_substitute",
    "general_solution_point",
    "generate_matrix",
    "householder_qr",
    "huang_parameters",
    "huang_solve",
    "implicit_factorization_check",
    "implicit_lu_parameters",
    "implicit_qr_parameters",
    "implicit_qr_solve",
    "jacobi_svd",
    "load_instance",
    "ls_huang_solve",
    "matvec",
    "matvec_transposed",
    "minimum_norm_solution",
    "perturb_cols",
    "perturb_rows",
    "pivoted_qr_least_squares",
    "qr_least_squares",
    "run_abs",
    "solve",
    "svd_least_squares",
    "time_solver",
    "write_outputs",
]
