"""Experiment harness: run the solver over parameter grids and emit CSV."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .bilinear import ConvergenceReport, SolveOptions, exact_dense, solve
from .linalg import InvalidInputError, SparseMatrix
from .matfun import ScalarFunction, cos_scaled, exp_scaled
from .matrices import gen_grcar, gen_laplacian1d, load_matrix_market, random_unit_vector

CSV_HEADER = "method,h,iter,m,F_m,xi_rel,xi_true_rel,cpu_seconds"


@dataclass(frozen=True)
class MatrixSource:
    """Where the experiment matrix comes from.

    kind "grcar" uses n and k, "lap1d" uses n, "mm" reads the Matrix Market
    file at path.
    """

    kind: str
    n: int = 0
    k: int = 3
    path: str = ""

    def __post_init__(self):
        if self.kind not in ("grcar", "lap1d", "mm"):
            raise InvalidInputError("matrix kind must be grcar, lap1d or mm")
        if self.kind in ("grcar", "lap1d") and self.n < 2:
            raise InvalidInputError("generated matrices need an order of at least 2")
        if self.kind == "mm" and not self.path:
            raise InvalidInputError("matrix market source needs a path")

    def build(self) -> SparseMatrix:
        if self.kind == "grcar":
            return gen_grcar(self.n, self.k)
        if self.kind == "lap1d":
            return gen_laplacian1d(self.n)
        return load_matrix_market(self.path)

    def describe(self) -> str:
        if self.kind == "grcar":
            return f"grcar:{self.n}:{self.k}"
        if self.kind == "lap1d":
            return f"lap1d:{self.n}"
        return f"mm:{self.path}"


@dataclass(frozen=True)
class CsvRow:
    """One recorded step of one run, in output column order."""

    method: str
    h: float
    iter: int
    m: int
    value: float
    xi_rel: float
    xi_true_rel: float | None
    cpu_seconds: float

    def format(self) -> str:
        true_part = "" if self.xi_true_rel is None else f"{self.xi_true_rel:.17g}"
        return (
            f"{self.method},{self.h:.17g},{self.iter},{self.m},"
            f"{self.value:.17g},{self.xi_rel:.17g},{true_part},"
            f"{self.cpu_seconds:.6f}"
        )


@dataclass(frozen=True)
class RunSummary:
    """Final state of one (method, h) run."""

    method: str
    h: float
    report: ConvergenceReport
    exact: float | None


@dataclass(frozen=True)
class ExperimentConfig:
    source: MatrixSource
    function: ScalarFunction
    h_values: tuple[float, ...]
    opts: SolveOptions = SolveOptions()
    compute_exact: bool = False
    output_path: str = ""

    def __post_init__(self):
        if not self.h_values:
            raise InvalidInputError("need at least one h value")
        if self.function.kind in ("exp_scaled", "cos_scaled"):
            for h in self.h_values:
                if not (math.isfinite(h) and h > 0.0):
                    raise InvalidInputError("h values must be positive and finite")


def _function_at(f: ScalarFunction, h: float) -> ScalarFunction:
    """The configured function with its scale replaced by h where that applies."""
    if f.kind == "exp_scaled":
        return exp_scaled(h)
    if f.kind == "cos_scaled":
        return cos_scaled(h)
    return f


def write_csv(path, rows, error: str | None = None) -> None:
    """Write header plus rows; a trailing comment records an aborting error."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.format() + "\n")
        if error is not None:
            fh.write(f"# error: {error}\n")


def run_experiment(config: ExperimentConfig):
    """Run the solver for every h and every requested method.

    Method "both" in the options runs arnoldi then idr for each h.  Returns
    (rows, summaries); when the config names an output path the rows are
    flushed there, including the partial rows followed by an error trailer
    when a run aborts.
    """
    methods = ("arnoldi", "idr") if config.opts.method == "both" else (config.opts.method,)
    matrix = config.source.build()
    n = matrix.n_rows
    if not matrix.is_square:
        raise InvalidInputError("experiment matrix must be square")
    if "idr" in methods and n < config.opts.s + 2:
        raise InvalidInputError(
            f"matrix order {n} too small for shadow dimension s={config.opts.s}"
        )
    u = random_unit_vector(n, config.opts.seed)
    v = random_unit_vector(n, config.opts.seed + 1)
    rows: list[CsvRow] = []
    summaries: list[RunSummary] = []
    try:
        for h in config.h_values:
            f = _function_at(config.function, h)
            exact = exact_dense(matrix, u, v, f) if config.compute_exact else None
            for method in methods:
                opts = replace(config.opts, method=method)
                report = solve(matrix, u, v, f, opts, exact=exact)
                for rec in report.steps:
                    rows.append(
                        CsvRow(
                            method=method,
                            h=h,
                            iter=rec.m - report.m0,
                            m=rec.m,
                            value=rec.value,
                            xi_rel=rec.xi_rel,
                            xi_true_rel=rec.xi_true_rel,
                            cpu_seconds=rec.cpu_seconds,
                        )
                    )
                summaries.append(RunSummary(method=method, h=h, report=report, exact=exact))
    except Exception as exc:
        if config.output_path:
            write_csv(config.output_path, rows, error=str(exc))
        raise
    if config.output_path:
        write_csv(config.output_path, rows)
    return rows, summaries
