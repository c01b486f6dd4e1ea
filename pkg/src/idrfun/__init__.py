"""Bilinear forms u^T f(A) v of sparse matrices by Krylov projection.

The basis comes from either the Arnoldi process or an IDR(s) recurrence, f
is evaluated on the small projected Hessenberg matrix, and iteration stops
through a leading-term a posteriori error estimate.
"""
from .bench import (
    CSV_HEADER,
    CsvRow,
    ExperimentConfig,
    MatrixSource,
    RunSummary,
    run_experiment,
    write_csv,
)
from .bilinear import (
    ConvergenceReport,
    SolveOptions,
    StepRecord,
    exact_dense,
    expansion_partial_sums,
    leading_term_estimate,
    project_value,
    solve,
)
from .krylov import (
    ArnoldiState,
    HessDecomp,
    IdrBreakdownError,
    IdrState,
    arnoldi_init,
    arnoldi_step,
    hessenberg_column,
    idr_init,
    idr_step,
    select_mu,
)
from .linalg import (
    InvalidInputError,
    SingularSystemError,
    SparseMatrix,
    orthogonalize_against,
    solve_small,
    spmv,
)
from .matfun import (
    ScalarFunction,
    cos_scaled,
    cosm,
    exp_scaled,
    expm,
    funm,
    monomial,
    phi1,
    phi_stack,
    polynomial,
)
from .matrices import (
    ParseError,
    gen_grcar,
    gen_laplacian1d,
    load_matrix_market,
    random_unit_vector,
    save_matrix_market,
)

__version__ = "0.1.0"

__all__ = [
    "ArnoldiState",
    "CSV_HEADER",
    "ConvergenceReport",
    "CsvRow",
    "ExperimentConfig",
    "HessDecomp",
    "IdrBreakdownError",
    "IdrState",
    "InvalidInputError",
    "MatrixSource",
    "ParseError",
    "RunSummary",
    "ScalarFunction",
    "SingularSystemError",
    "SolveOptions",
    "SparseMatrix",
    "StepRecord",
    "arnoldi_init",
    "arnoldi_step",
    "cos_scaled",
    "cosm",
    "exact_dense",
    "exp_scaled",
    "expansion_partial_sums",
    "expm",
    "funm",
    "gen_grcar",
    "gen_laplacian1d",
    "hessenberg_column",
    "idr_init",
    "idr_step",
    "leading_term_estimate",
    "load_matrix_market",
    "monomial",
    "orthogonalize_against",
    "phi1",
    "phi_stack",
    "polynomial",
    "project_value",
    "random_unit_vector",
    "run_experiment",
    "save_matrix_market",
    "select_mu",
    "solve",
    "solve_small",
    "spmv",
    "write_csv",
    "__version__",
]
