"""HTTP service wrapping the library: model validation, transforms, Riccati
trajectories, path simulation summaries, closed-form oracles, and the check
suites. The CLI's `serve` subcommand runs this app under uvicorn."""

import math

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..closedforms import ORACLE_DEFAULT_U, oracle_eval
from ..errors import BlowUpError
from ..model import AffineModel
from ..riccati import COMPLETE, solve_riccati, transform
from ..simulate import SimConfig, simulate
from ..verify import run_suite
from .schemas import (ComplexNumber, OracleRequest, RiccatiNode,
                      RiccatiRequest, RiccatiResponse, SimulateRequest,
                      TransformRequest, TransformResponse, ValidateRequest,
                      VerifyRequest, to_cvector)

# simulate endpoint guard: recorded cells (paths x recorded nodes x dim)
_MAX_RECORD_CELLS = 50_000_000


def create_app():
    app = FastAPI(title="affine-kit", version=__version__,
                  description="Affine-process transforms, simulation, and checks")

    @app.exception_handler(ValueError)
    async def _value_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(BlowUpError)
    async def _blow_up(request, exc):
        detail = {"detail": str(exc)}
        if exc.t_star is not None:
            detail["t_star"] = exc.t_star
        return JSONResponse(status_code=422, content=detail)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/model/validate")
    def validate_model(req: ValidateRequest):
        return AffineModel.from_dict(req.model).validate().to_dict()

    @app.post("/transform", response_model=TransformResponse)
    def do_transform(req: TransformRequest):
        model = AffineModel.from_dict(req.model)
        value = transform(model, np.array(req.x), req.t, to_cvector(req.u), tol=req.tol)
        return TransformResponse(value=ComplexNumber.wrap(value), killed=value.killed)

    @app.post("/riccati", response_model=RiccatiResponse)
    def do_riccati(req: RiccatiRequest):
        model = AffineModel.from_dict(req.model)
        sol = solve_riccati(model, to_cvector(req.u), horizon=req.horizon, tol=req.tol)
        grid = [RiccatiNode(t=float(sol.t[i]),
                            phi=ComplexNumber.wrap(sol.phi[i]),
                            psi=[ComplexNumber.wrap(z) for z in sol.psi[i]])
                for i in range(len(sol.t))]
        t_star = None if sol.status == COMPLETE or math.isnan(sol.t_star) else float(sol.t_star)
        return RiccatiResponse(status=sol.status, t_star=t_star, tol=sol.tol,
                               horizon=sol.horizon, grid=grid)

    @app.post("/simulate")
    def do_simulate(req: SimulateRequest):
        model = AffineModel.from_dict(req.model)
        cfg = SimConfig(dt=req.dt, horizon=req.horizon, n_paths=req.n_paths,
                        seed=req.seed, scheme=req.scheme, record_every=req.record_every)
        cells = req.n_paths * len(cfg.record_steps()) * model.n
        if cells > _MAX_RECORD_CELLS:
            raise ValueError(
                f"request records {cells} cells (> {_MAX_RECORD_CELLS}); "
                "raise record_every or lower n_paths")
        ensemble = simulate(model, np.array(req.x0), cfg, threads=req.threads)
        return ensemble.summary()

    @app.post("/oracle")
    def do_oracle(req: OracleRequest):
        if req.u is not None:
            u = to_cvector(req.u)
        else:
            if req.name not in ORACLE_DEFAULT_U:
                raise ValueError(f"unknown oracle {req.name!r}")
            u = np.array([complex(p) for p in ORACLE_DEFAULT_U[req.name].split(",")])
        x = np.array(req.x) if req.x is not None else None
        return oracle_eval(req.name, req.t, u, x)

    @app.post("/verify")
    def do_verify(req: VerifyRequest):
        return run_suite(req.suite, seed=req.seed, n_paths=req.n_paths,
                         threads=req.threads)

    return app
