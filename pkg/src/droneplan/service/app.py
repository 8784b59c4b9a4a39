"""FastAPI service wrapping the planning pipeline.

The service is a local compute server: requests name input files on its
filesystem and an output directory to write into. Errors carry a stable
`code` the CLI maps to exit codes.
"""

import functools

from fastapi import FastAPI, HTTPException

from .. import pipeline
from ..errors import (ConfigError, DimensionError, DronePlanError, InputError, ParseError,
                      PlanningError)
from ..sensitivity import ParamDist
from .schemas import (BuildFieldRequest, BuildFieldResponse, PairRequest, PairResponse,
                      PlanRequest, PlanResponse, SensitivityRequest, SensitivityResponse,
                      WalkRequest, WalkResponse)

CODE_MISSING = "missing-input"
CODE_MALFORMED = "malformed-input"
CODE_INFEASIBLE = "planning-infeasible"
CODE_INSUFFICIENT = "insufficient-routes"

_STATUS = {CODE_MISSING: 404, CODE_MALFORMED: 422, CODE_INFEASIBLE: 409, CODE_INSUFFICIENT: 409}


def _fail(code, exc):
    raise HTTPException(status_code=_STATUS[code], detail={"code": code, "message": str(exc)})


def _guarded(insufficient_on_input_error=False):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except FileNotFoundError as exc:
                _fail(CODE_MISSING, exc)
            except (ParseError, DimensionError, ConfigError) as exc:
                _fail(CODE_MALFORMED, exc)
            except PlanningError as exc:
                _fail(CODE_INFEASIBLE, exc)
            except InputError as exc:
                _fail(CODE_INSUFFICIENT if insufficient_on_input_error else CODE_MALFORMED, exc)
            except DronePlanError as exc:
                _fail(CODE_MALFORMED, exc)
        return wrapper
    return decorate


def _origin_kwargs(origin):
    return {
        "origin_row": origin.row, "origin_col": origin.col,
        "origin_lat": origin.lat, "origin_lon": origin.lon,
        "plan_file": origin.plan_file, "base_index": origin.base_index,
    }


def create_app():
    app = FastAPI(title="droneplan", version="0.1.0")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/field/build", response_model=BuildFieldResponse)
    @_guarded()
    def build_field(req: BuildFieldRequest):
        return pipeline.build_field_bundle(req.altitude_grid, req.roads, req.out_dir,
                                           buffer_m=req.buffer_m)

    @app.post("/plan", response_model=PlanResponse)
    @_guarded()
    def plan(req: PlanRequest):
        return pipeline.plan_bases(
            req.field_dir, req.destinations, req.out_dir, req.seed,
            drone_catalog=req.drone_catalog, package_catalog=req.package_catalog,
            range_k=req.range_k, k_max=req.k_max, container_dims=req.container_dims,
            road_ratio=req.road_ratio)

    @app.post("/walk", response_model=WalkResponse)
    @_guarded()
    def walk(req: WalkRequest):
        return pipeline.walk_batch(
            req.field_dir, req.out_dir, req.seed, batch=req.batch, jobs=req.jobs,
            top_n=req.top_n, params=req.params.model_dump(),
            **_origin_kwargs(req.origin))

    @app.post("/pair", response_model=PairResponse)
    @_guarded(insufficient_on_input_error=True)
    def pair(req: PairRequest):
        return pipeline.pair_routes(req.field_dir, req.routes_dir, req.out_dir,
                                    knn_rule=req.knn_rule, area=req.area)

    @app.post("/sensitivity", response_model=SensitivityResponse)
    @_guarded()
    def sensitivity(req: SensitivityRequest):
        dist = ParamDist(**req.dist.model_dump())
        return pipeline.sensitivity_run(
            req.field_dir, req.out_dir, req.seed, batch=req.batch, jobs=req.jobs,
            threshold=req.threshold, dist=dist, n_per_rule=req.n_per_rule,
            params=req.params.model_dump(), **_origin_kwargs(req.origin))

    return app


app = create_app()
