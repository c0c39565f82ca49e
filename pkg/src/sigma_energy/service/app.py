"""HTTP service exposing the analysis pipelines.

Endpoints: GET /health, GET /cases, POST /run, POST /energy,
POST /reproduce/{case}.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..config import ConfigError, default_config, parse_config_text
from ..pipelines import (COMMANDS, RunResult, case_names, run_command,
                         run_reproduce, to_jsonable)
from .schemas import (CasesResponse, EnergyRequest, HealthResponse,
                      RunRequest, RunResponse, TableModel)

from .. import __version__ as VERSION

PACKAGE = "sigma-energy"


def _config_from(config_text, overrides):
    cfg = (parse_config_text(config_text, source="<request>")
           if config_text else default_config())
    if overrides:
        cfg = cfg.override_text({str(k): v for k, v in overrides.items()})
    return cfg


def _to_response(result: RunResult) -> RunResponse:
    def tables(items):
        return [TableModel(name=t.name,
                           header=[str(h) for h in t.header],
                           rows=[list(to_jsonable(list(r))) for r in t.rows])
                for t in items]

    return RunResponse(command=result.command, report=result.report,
                       tables=tables(result.tables),
                       plotdata=tables(result.plotdata),
                       exit_code=result.exit_code)


def create_app() -> FastAPI:
    app = FastAPI(title=PACKAGE, version=VERSION)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", package=PACKAGE, version=VERSION)

    @app.get("/cases", response_model=CasesResponse)
    def cases() -> CasesResponse:
        return CasesResponse(cases=case_names())

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest) -> RunResponse:
        if req.command not in COMMANDS:
            raise HTTPException(
                status_code=400,
                detail=f"unknown command {req.command!r}; known: "
                       f"{', '.join(COMMANDS)}")
        try:
            cfg = _config_from(req.config_text, req.overrides)
            if req.command == "reproduce":
                result = run_reproduce(cfg, case=req.case)
            else:
                result = run_command(req.command, cfg)
        except (ConfigError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return _to_response(result)

    @app.post("/energy", response_model=RunResponse)
    def energy(req: EnergyRequest) -> RunResponse:
        try:
            cfg = _config_from(req.config_text, req.overrides)
            result = run_command("energy", cfg)
        except (ConfigError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return _to_response(result)

    @app.post("/reproduce/{case}", response_model=RunResponse)
    def reproduce(case: str) -> RunResponse:
        if case != "all" and case not in case_names():
            raise HTTPException(status_code=404,
                                detail=f"unknown case {case!r}")
        result = run_reproduce(default_config(), case=case)
        return _to_response(result)

    return app


app = create_app()
