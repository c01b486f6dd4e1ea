"""Request and response models of the HTTP service."""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from ..bench import ExperimentConfig, MatrixSource
from ..bilinear import SolveOptions
from ..matfun import ScalarFunction, cos_scaled, exp_scaled, monomial, polynomial


class MatrixModel(BaseModel):
    kind: Literal["grcar", "lap1d", "mm"]
    n: int = 0
    k: int = 3
    path: str = ""

    def to_source(self) -> MatrixSource:
        return MatrixSource(kind=self.kind, n=self.n, k=self.k, path=self.path)


class FunctionModel(BaseModel):
    kind: Literal["exp", "cos", "poly", "monomial"]
    coeffs: Optional[list[float]] = None
    degree: Optional[int] = None

    @model_validator(mode="after")
    def _check_parameters(self):
        if self.kind == "poly" and not self.coeffs:
            raise ValueError("poly needs coeffs")
        if self.kind == "monomial" and self.degree is None:
            raise ValueError("monomial needs degree")
        return self

    def to_function(self, h: float) -> ScalarFunction:
        if self.kind == "exp":
            return exp_scaled(h)
        if self.kind == "cos":
            return cos_scaled(h)
        if self.kind == "poly":
            return polynomial(self.coeffs)
        return monomial(self.degree)


class OptionsModel(BaseModel):
    s: int = 6
    tol: float = Field(default=1e-8, gt=0.0)
    maxit: int = 300
    t0_rule: Literal["zero", "h11"] = "h11"
    seed: int = 42
    check_every: int = 1

    def to_options(self, method: str) -> SolveOptions:
        return SolveOptions(
            s=self.s,
            tol=self.tol,
            maxit=self.maxit,
            method=method,
            t0_rule=self.t0_rule,
            seed=self.seed,
            check_every=self.check_every,
        )


class SolveRequest(BaseModel):
    matrix: MatrixModel
    function: FunctionModel
    h_values: list[float] = Field(min_length=1)
    method: Literal["idr", "arnoldi", "both"] = "idr"
    options: OptionsModel = OptionsModel()
    compute_exact: bool = False
    include_steps: bool = True


class StepModel(BaseModel):
    m: int
    iter: int
    value: float
    xi_rel: float
    xi_true_rel: Optional[float] = None
    cpu_seconds: float


class RunModel(BaseModel):
    method: str
    h: float
    converged: bool
    termination: str
    iterations: int
    m: int
    value: float
    exact: Optional[float] = None
    cpu_seconds: float
    steps: list[StepModel] = []


class SolveResponse(BaseModel):
    matrix: str
    function: str
    runs: list[RunModel]


class BenchRequest(SolveRequest):
    output_path: str = ""


class BenchResponse(SolveResponse):
    csv_rows: list[str] = []
    output_path: str = ""


class HealthResponse(BaseModel):
    status: str
    version: str


def request_to_config(request: SolveRequest, output_path: str = "") -> ExperimentConfig:
    """Translate a validated request into an experiment configuration."""
    function = request.function.to_function(request.h_values[0])
    return ExperimentConfig(
        source=request.matrix.to_source(),
        function=function,
        h_values=tuple(request.h_values),
        opts=request.options.to_options(request.method),
        compute_exact=request.compute_exact,
        output_path=output_path,
    )
