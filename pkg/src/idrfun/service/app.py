"""FastAPI application exposing the solver over HTTP.

Run locally with:

    uvicorn idrfun.service:app --port 8000
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..bench import run_experiment
from ..linalg import InvalidInputError
from ..matrices import ParseError
from .schemas import (
    BenchRequest,
    BenchResponse,
    HealthResponse,
    RunModel,
    SolveRequest,
    SolveResponse,
    StepModel,
    request_to_config,
)


def _run(request: SolveRequest, output_path: str = ""):
    try:
        config = request_to_config(request, output_path)
        rows, summaries = run_experiment(config)
    except (InvalidInputError, ParseError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except OSError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    runs = []
    for summary in summaries:
        rep = summary.report
        steps = []
        if request.include_steps:
            steps = [
                StepModel(
                    m=rec.m,
                    iter=rec.m - rep.m0,
                    value=rec.value,
                    xi_rel=rec.xi_rel,
                    xi_true_rel=rec.xi_true_rel,
                    cpu_seconds=rec.cpu_seconds,
                )
                for rec in rep.steps
            ]
        runs.append(
            RunModel(
                method=summary.method,
                h=summary.h,
                converged=rep.converged,
                termination=rep.termination,
                iterations=rep.iterations,
                m=rep.m_final,
                value=rep.final_value,
                exact=summary.exact,
                cpu_seconds=rep.cpu_seconds,
                steps=steps,
            )
        )
    return config, rows, runs


def create_app() -> FastAPI:
    app = FastAPI(title="idrfun", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/solve", response_model=SolveResponse)
    def solve_endpoint(request: SolveRequest) -> SolveResponse:
        config, _, runs = _run(request)
        return SolveResponse(
            matrix=config.source.describe(),
            function=config.function.describe(),
            runs=runs,
        )

    @app.post("/bench", response_model=BenchResponse)
    def bench_endpoint(request: BenchRequest) -> BenchResponse:
        config, rows, runs = _run(request, request.output_path)
        return BenchResponse(
            matrix=config.source.describe(),
            function=config.function.describe(),
            runs=runs,
            csv_rows=[row.format() for row in rows],
            output_path=request.output_path,
        )

    return app


app = create_app()
