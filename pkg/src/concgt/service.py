"""FastAPI service exposing campaigns, bounds, and disjunct-matrix tooling.

The service is a thin wrapper over the library; all domain logic lives in
the core modules.  Campaigns run synchronously inside the request, which is
adequate at the desk scales this package targets.
"""

from __future__ import annotations

from dataclasses import asdict

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from . import __version__, analysis, det_nonadaptive, harness, standard_gt
from .core import ConcGTError
from .schemas import (
    BoundReportModel,
    BoundsRequest,
    DisjunctBuildRequest,
    DisjunctBuildResponse,
    DisjunctCheckRequest,
    DisjunctCheckResponse,
    HealthResponse,
    RunRequest,
    RunResponse,
)

app = FastAPI(title="concgt", version=__version__)


@app.exception_handler(ConcGTError)
async def _domain_error(request, exc: ConcGTError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/run", response_model=RunResponse)
def run(request: RunRequest) -> RunResponse:
    campaign = harness.Campaign(
        scheme=request.scheme,
        n=request.n,
        sizes=tuple(request.sizes),
        trials=request.trials,
        seed=request.seed,
        epsilon=request.epsilon,
        alpha=request.alpha,
        instance_mode=request.instance_mode,
        exact_sizes=request.exact_sizes,
        instance_text=request.instance_text,
        max_attempts=request.max_attempts,
    )
    records, summary = harness.run_campaign(campaign)
    return RunResponse(
        records=[asdict(r) | {"sizes": list(r.sizes)} for r in records],
        summary=asdict(summary),
    )


@app.post("/bounds", response_model=BoundReportModel)
def bounds(request: BoundsRequest) -> BoundReportModel:
    report = analysis.make_bound_report(request.n, request.sizes)
    return BoundReportModel(**asdict(report) | {"sizes": list(report.sizes)})


@app.post("/disjunct/check", response_model=DisjunctCheckResponse)
def disjunct_check(request: DisjunctCheckRequest) -> DisjunctCheckResponse:
    matrix = standard_gt.parse_matrix(request.matrix)
    witness = det_nonadaptive.find_disjunct_violation(matrix, request.u, request.v)
    if witness is None:
        return DisjunctCheckResponse(disjunct=True)
    designated, others = witness
    return DisjunctCheckResponse(
        disjunct=False,
        witness_designated=list(designated),
        witness_others=list(others),
    )


@app.post("/disjunct/build", response_model=DisjunctBuildResponse)
def disjunct_build(request: DisjunctBuildRequest) -> DisjunctBuildResponse:
    cert = det_nonadaptive.build_disjunct(
        request.n, request.u, request.v, seed=request.seed, verify=request.verify
    )
    return DisjunctBuildResponse(
        matrix=standard_gt.dump_matrix(cert.matrix),
        t=cert.matrix.t,
        n=cert.matrix.n,
        u=cert.u,
        v=cert.v,
        verified=cert.verified,
    )
