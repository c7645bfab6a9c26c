"""FastAPI service wrapping the experiment runners.

Each endpoint validates a flat request model, runs the experiment
synchronously (these are desk-scale jobs) and returns the report plus
named tables; clients render tables to CSV.  Error mapping: validation
422 (config), insufficient data 409, numeric inconsistency / inequality
violation 500, with a machine-readable ``code`` the CLI translates to its
exit codes.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, experiments, schemas
from ..errors import (InsufficientDataError, InvalidArgumentError,
                      LemmaViolationError, NumericInconsistencyError,
                      PercolabError)


def create_app() -> FastAPI:
    app = FastAPI(title="percolab", version=__version__)

    @app.exception_handler(PercolabError)
    async def _percolab_error(request: Request, exc: PercolabError):
        if isinstance(exc, InsufficientDataError):
            status, code = 409, "insufficient-data"
        elif isinstance(exc, (NumericInconsistencyError, LemmaViolationError)):
            status, code = 500, "numeric-inconsistency"
        elif isinstance(exc, InvalidArgumentError):
            status, code = 422, "config-error"
        else:
            status, code = 500, "internal"
        return JSONResponse(status_code=status,
                            content={"error": str(exc), "code": code})

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/v1/sizes", response_model=schemas.RunResponse)
    def sizes(req: schemas.SizesRequest):
        return experiments.run_sizes(req)

    @app.post("/v1/qn", response_model=schemas.RunResponse)
    def qn(req: schemas.QnRequest):
        return experiments.run_qn(req, want_compare=False)

    @app.post("/v1/compare-qn", response_model=schemas.RunResponse)
    def compare_qn(req: schemas.QnRequest):
        return experiments.run_qn(req, want_compare=True)

    @app.post("/v1/q3", response_model=schemas.RunResponse)
    def q3(req: schemas.Q3Request):
        return experiments.run_q3(req, want_compare=False)

    @app.post("/v1/compare-q3", response_model=schemas.RunResponse)
    def compare_q3(req: schemas.Q3Request):
        return experiments.run_q3(req, want_compare=True)

    @app.post("/v1/ise", response_model=schemas.RunResponse)
    def ise_tables(req: schemas.IseRequest):
        return experiments.run_ise(req)

    @app.post("/v1/coeff", response_model=schemas.RunResponse)
    def coeff(req: schemas.CoeffRequest):
        return experiments.run_coeff(req)

    @app.post("/v1/lemmas", response_model=schemas.RunResponse)
    def lemmas(req: schemas.LemmasRequest):
        return experiments.run_lemmas(req)

    @app.post("/v1/diagrams", response_model=schemas.RunResponse)
    def diagrams_ep(req: schemas.DiagramsRequest):
        return experiments.run_diagrams(req)

    @app.post("/v1/pc", response_model=schemas.RunResponse)
    def pc(req: schemas.PcRequest):
        return experiments.run_pc(req)

    @app.post("/v1/tree", response_model=schemas.RunResponse)
    def tree(req: schemas.TreeRequest):
        return experiments.run_tree(req)

    return app
