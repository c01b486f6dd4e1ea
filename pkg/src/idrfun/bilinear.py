"""Approximation of bilinear forms u^T f(A) v by Krylov projection.

The driver grows a Hessenberg decomposition with either basis builder,
projects f onto the small Hessenberg matrix, and stops when the leading term
of the a posteriori error expansion falls under the requested tolerance.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .krylov import (
    HessDecomp,
    IdrBreakdownError,
    arnoldi_init,
    arnoldi_step,
    idr_init,
    idr_step,
)
from .linalg import InvalidInputError, SparseMatrix, spmv
from .matfun import ScalarFunction, exp_scaled, funm, phi1, phi_stack

# Largest order accepted by the dense reference evaluation.
EXACT_DENSE_MAX_N = 4000

METHODS = ("idr", "arnoldi", "both")
T0_RULES = ("zero", "h11")


@dataclass(frozen=True)
class SolveOptions:
    """Options for the stopping driver.

    s: shadow space dimension of the IDR process (ignored by Arnoldi).
    tol: relative stopping tolerance on the leading-term estimate.
    maxit: largest basis size m the driver may build.
    method: "idr" or "arnoldi".
    t0_rule: interpolation point of the estimate, "h11" for the (1,1) entry
        of the current Hessenberg matrix or "zero" for 0.
    seed: seed for the shadow space draw.
    check_every: evaluate the projection and estimate every this many steps.
    """

    s: int = 6
    tol: float = 1e-8
    maxit: int = 300
    method: str = "idr"
    t0_rule: str = "h11"
    seed: int = 42
    check_every: int = 1

    def __post_init__(self):
        if self.s < 1:
            raise InvalidInputError("s must be at least 1")
        if not (self.tol > 0.0):
            raise InvalidInputError("tol must be positive")
        if self.maxit < 1:
            raise InvalidInputError("maxit must be at least 1")
        if self.method not in METHODS:
            raise InvalidInputError(f"method must be one of {METHODS}")
        if self.t0_rule not in T0_RULES:
            raise InvalidInputError(f"t0_rule must be one of {T0_RULES}")
        if self.check_every < 1:
            raise InvalidInputError("check_every must be at least 1")


@dataclass(frozen=True)
class StepRecord:
    """One evaluation of the projection during a run.

    xi_true_rel is None when no reference value was supplied, and xi_rel is
    infinite when the projected value was exactly zero.
    """

    m: int
    value: float
    xi_rel: float
    xi_true_rel: float | None
    cpu_seconds: float


@dataclass
class ConvergenceReport:
    """Outcome of one stopping run."""

    method: str
    converged: bool
    termination: str  # tolerance | maxit | happy_breakdown | idr_breakdown
    m0: int
    steps: list[StepRecord] = field(default_factory=list)

    @property
    def final_value(self) -> float:
        return self.steps[-1].value if self.steps else float("nan")

    @property
    def m_final(self) -> int:
        return self.steps[-1].m if self.steps else self.m0

    @property
    def iterations(self) -> int:
        """Expansion steps past the initial basis (warmup excluded for IDR)."""
        return self.m_final - self.m0

    @property
    def cpu_seconds(self) -> float:
        return self.steps[-1].cpu_seconds if self.steps else 0.0


def project_value(decomp: HessDecomp, u, beta: float, f: ScalarFunction) -> float:
    """The projected bilinear form beta * u^T V_m f(H_m) e_1."""
    u = np.asarray(u, dtype=np.float64)
    m = decomp.m
    if m < 1:
        raise InvalidInputError("decomposition has no columns yet")
    h_small = np.ascontiguousarray(decomp.h_square)
    fh = funm(h_small, f)
    return float(beta * ((u @ decomp.basis[:, :m]) @ fh[:, 0]))


def leading_term_estimate(
    decomp: HessDecomp,
    u,
    beta: float,
    f: ScalarFunction,
    t0_rule: str = "h11",
    value: float | None = None,
) -> tuple[float, float]:
    """Leading-term error estimate (xi1, xi_rel) of the projection.

    xi1 is beta * |e_m^T phi_1(H_m) e_1| * |u^T r| with r the residual
    vector h_{m+1,m} v_{m+1} of the decomposition and the confluent point t0
    given by the rule.  xi_rel divides by |F_m|, recomputing the projected
    value unless it is passed in; a zero projected value gives an infinite
    xi_rel.  Requires a decomposition that still has its residual column.
    """
    u = np.asarray(u, dtype=np.float64)
    m = decomp.m
    if m < 1:
        raise InvalidInputError("decomposition has no columns yet")
    if not decomp.has_residual:
        raise InvalidInputError("no residual column after happy breakdown")
    h_small = np.ascontiguousarray(decomp.h_square)
    t0 = float(h_small[0, 0]) if t0_rule == "h11" else 0.0
    p1 = phi1(h_small, f, t0)
    h_sub = float(decomp.h_bar[m, m - 1])
    xi1 = float(beta * abs(p1[m - 1, 0]) * h_sub * abs(u @ decomp.basis[:, m]))
    if value is None:
        value = project_value(decomp, u, beta, f)
    xi_rel = xi1 / abs(value) if value != 0.0 else float("inf")
    return xi1, xi_rel


def exact_dense(matrix: SparseMatrix, u, v, f: ScalarFunction) -> float:
    """Reference value u^T f(A) v through a dense evaluation of f(A).

    Only intended for desk-scale matrices; refuses orders above
    ``EXACT_DENSE_MAX_N``.
    """
    if not matrix.is_square:
        raise InvalidInputError("matrix must be square")
    if matrix.n_rows > EXACT_DENSE_MAX_N:
        raise InvalidInputError(
            f"dense reference limited to order {EXACT_DENSE_MAX_N}"
        )
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != (matrix.n_rows,) or v.shape != (matrix.n_rows,):
        raise InvalidInputError("vector lengths must match the matrix order")
    fa = funm(matrix.to_dense(), f)
    return float(u @ fa @ v)


def expansion_partial_sums(
    matrix: SparseMatrix, decomp: HessDecomp, u, beta: float, h: float, depth: int
) -> list[float]:
    """Partial sums S_1..S_depth of the error expansion for f(t) = exp(-h t).

    Term j is beta * e_m^T phi_j(H_m) e_1 * u^T A^(j-1) r with r the residual
    vector of the decomposition and the phi functions taken at confluent
    point 0, so the powers of A are exactly the expansion polynomials.
    """
    u = np.asarray(u, dtype=np.float64)
    if depth < 1:
        raise InvalidInputError("depth must be at least 1")
    if not decomp.has_residual:
        raise InvalidInputError("no residual column after happy breakdown")
    m = decomp.m
    f = exp_scaled(h)
    h_small = np.ascontiguousarray(decomp.h_square)
    stack = phi_stack(h_small, f, 0.0, depth)
    w = float(decomp.h_bar[m, m - 1]) * decomp.basis[:, m]
    sums = []
    total = 0.0
    for j in range(1, depth + 1):
        total += beta * stack[j - 1][m - 1, 0] * float(u @ w)
        sums.append(total)
        if j < depth:
            w = spmv(matrix, w)
    return sums


def _solve_once(
    matrix: SparseMatrix,
    u: np.ndarray,
    v: np.ndarray,
    f: ScalarFunction,
    opts: SolveOptions,
    seed: int,
    exact: float | None,
) -> ConvergenceReport:
    beta = float(np.linalg.norm(v))
    start = time.perf_counter()
    if opts.method == "arnoldi":
        state = arnoldi_init(matrix, v, capacity=min(opts.maxit, matrix.n_rows))
    else:
        if opts.maxit <= opts.s:
            raise InvalidInputError("maxit must exceed s for the idr method")
        state = idr_init(matrix, v, opts.s, seed, capacity=min(opts.maxit, matrix.n_rows))
    report = ConvergenceReport(
        method=opts.method, converged=False, termination="maxit", m0=state.m
    )

    def record(value: float, xi_rel: float) -> StepRecord:
        xi_true = None
        if exact is not None:
            xi_true = abs(value - exact) / abs(exact) if exact != 0.0 else float("inf")
        rec = StepRecord(
            m=state.m,
            value=value,
            xi_rel=xi_rel,
            xi_true_rel=xi_true,
            cpu_seconds=time.perf_counter() - start,
        )
        report.steps.append(rec)
        return rec

    pending = 0
    while True:
        if state.happy:
            value = project_value(state.decomp, u, beta, f)
            record(value, 0.0)
            report.converged = True
            report.termination = "happy_breakdown"
            return report
        if state.m >= opts.maxit:
            if not report.steps or report.steps[-1].m != state.m:
                decomp = state.decomp
                value = project_value(decomp, u, beta, f)
                _, xi_rel = leading_term_estimate(
                    decomp, u, beta, f, opts.t0_rule, value=value
                )
                record(value, xi_rel)
            report.converged = report.steps[-1].xi_rel < opts.tol
            report.termination = "tolerance" if report.converged else "maxit"
            return report
        try:
            if opts.method == "arnoldi":
                arnoldi_step(state, matrix)
            else:
                idr_step(state, matrix)
        except IdrBreakdownError:
            report.termination = "idr_breakdown"
            return report
        pending += 1
        if state.happy or pending < opts.check_every:
            # a happy step is recorded by the check at the top of the loop
            continue
        pending = 0
        decomp = state.decomp
        value = project_value(decomp, u, beta, f)
        _, xi_rel = leading_term_estimate(decomp, u, beta, f, opts.t0_rule, value=value)
        record(value, xi_rel)
        if xi_rel < opts.tol:
            report.converged = True
            report.termination = "tolerance"
            return report


def solve(
    matrix: SparseMatrix,
    u,
    v,
    f: ScalarFunction,
    opts: SolveOptions = SolveOptions(),
    exact: float | None = None,
) -> ConvergenceReport:
    """Approximate u^T f(A) v to the requested tolerance.

    Grows the Krylov decomposition chosen by ``opts.method``, evaluating the
    projected value and the leading-term estimate every ``opts.check_every``
    steps, and stops when the relative estimate drops under ``opts.tol``,
    the basis reaches ``opts.maxit`` columns, or the process finds an
    invariant subspace (happy breakdown, which makes the projection exact).
    A singular IDR deflation system is retried once with a reseeded shadow
    space; a second failure is reported as termination "idr_breakdown".

    Parameters
    ----------
    matrix : SparseMatrix
        Square sparse matrix A.
    u, v : array_like
        The two vectors of the bilinear form.
    f : ScalarFunction
        The scalar function to apply to A.
    opts : SolveOptions
        Driver options.
    exact : float, optional
        Reference value; when given, every step record carries the true
        relative error next to the estimate.

    Returns
    -------
    ConvergenceReport
        Per-step records plus the termination summary.
    """
    if not matrix.is_square:
        raise InvalidInputError("matrix must be square")
    if opts.method == "both":
        raise InvalidInputError(
            "solve runs a single method; use run_experiment for both"
        )
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    n = matrix.n_rows
    if u.shape != (n,) or v.shape != (n,):
        raise InvalidInputError("vector lengths must match the matrix order")
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise InvalidInputError("vectors must be finite")
    if np.linalg.norm(u) == 0.0 or np.linalg.norm(v) == 0.0:
        raise InvalidInputError("vectors must be nonzero")
    report = _solve_once(matrix, u, v, f, opts, opts.seed, exact)
    if report.termination == "idr_breakdown":
        report = _solve_once(matrix, u, v, f, opts, opts.seed + 1, exact)
        if report.termination == "idr_breakdown":
            report.converged = False
    return report
