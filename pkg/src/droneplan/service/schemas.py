"""Pydantic request/response models for the planning service."""

from pydantic import BaseModel, Field


class WalkParamsModel(BaseModel):
    mfd_m: float | None = None          # defaults to the longest-range video drone
    alpha: float = 0.2
    beta: float = 0.3
    knn_rule: int = 8
    decay: float = 0.5
    max_proposals: int | None = None
    max_climb_m: float | None = None


class OriginModel(BaseModel):
    row: int | None = None
    col: int | None = None
    lat: float | None = None
    lon: float | None = None
    plan_file: str | None = None
    base_index: int | None = None


class BuildFieldRequest(BaseModel):
    altitude_grid: str
    roads: str
    out_dir: str
    buffer_m: float = 50.0


class BuildFieldResponse(BaseModel):
    out_dir: str
    files: list[str]
    n_rows: int
    n_cols: int
    cell_size_m: float
    road_cells: int


class PlanRequest(BaseModel):
    field_dir: str
    destinations: str
    out_dir: str
    seed: int
    drone_catalog: str | None = None
    package_catalog: str | None = None
    range_k: float = 1.3
    k_max: int = 3
    container_dims: tuple[float, float, float] | None = None
    road_ratio: int = 10


class PlanResponse(BaseModel):
    out_dir: str
    plan_file: str
    plan: dict
    containers: dict
    plan_table: list[dict]


class WalkRequest(BaseModel):
    field_dir: str
    out_dir: str
    seed: int
    batch: int = Field(default=10000, ge=1)
    jobs: int = 1
    top_n: int = 5
    origin: OriginModel = OriginModel()
    params: WalkParamsModel = WalkParamsModel()


class WalkResponse(BaseModel):
    out_dir: str
    results_csv: str
    route_files: list[str]
    batch: int
    n_home: int
    origin: list[int]
    best: dict


class PairRequest(BaseModel):
    field_dir: str
    routes_dir: str
    out_dir: str
    knn_rule: int = 8
    area: str = "road"


class PairResponse(BaseModel):
    out_dir: str
    report_file: str
    overlay_file: str
    pair: list[str]
    report: dict


class ParamDistModel(BaseModel):
    mean_alpha: float = 0.5
    var_alpha: float = 0.7
    mean_beta: float = 0.5
    var_beta: float = 0.05


class SensitivityRequest(BaseModel):
    field_dir: str
    out_dir: str
    seed: int
    batch: int = Field(default=1000, ge=1)
    jobs: int = 1
    threshold: float | None = None
    n_per_rule: int = 50
    dist: ParamDistModel = ParamDistModel()
    origin: OriginModel = OriginModel()
    params: WalkParamsModel = WalkParamsModel()


class SensitivityResponse(BaseModel):
    out_dir: str
    origin: list[int]
    results_csv: str
    fit_report: str
    regression_report: str
    knn_report: str
    fit: dict
    regression: dict
    knn: list[dict]


class ErrorDetail(BaseModel):
    code: str
    message: str
