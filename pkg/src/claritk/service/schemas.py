"""Request/response payload models for the HTTP facade.

The service adds no numerics of its own: every numeric field is passed
through from the library untouched (JSON floats round-trip exactly), which
is what the bit-parity acceptance test pins down.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class ProjectCreate(BaseModel):
    name: str = Field(min_length=1, max_length=200)


class ProjectRename(BaseModel):
    name: str = Field(min_length=1, max_length=200)


class FilterRequest(BaseModel):
    dataset_id: str
    mode: str = Field(pattern="^(outliers|movavg)$")
    window_n: int = 20
    z_threshold: float = 1.96
    resample_dt: float | None = None
    store: bool = False


class VelocityPointIn(BaseModel):
    X: float
    Vs: float


class SettlingFitRequest(BaseModel):
    kind: str = Field(pattern="^(vesilind|takacs)$")
    dataset_ids: list[str] | None = None
    points: list[VelocityPointIn] | None = None


class RheologyFitRequest(BaseModel):
    kind: str = Field(pattern="^(newtonian|bingham|powerlaw|herschelbulkley)$")
    dataset_id: str | None = None
    temperature_C: float | None = None


class GeometryIn(BaseModel):
    diameter: float
    side_water_depth: float
    feedwell_diameter: float
    feedwell_depth: float
    weir_length: float
    n_tanks: int = 1


class OperatingPointIn(BaseModel):
    Q_i: float
    Q_r: float
    X_f: float


class RuleIn(BaseModel):
    id: str
    quantity: str
    low: float | None = None
    high: float | None = None
    unit: str = "-"
    reference: str = ""


class DesignCheckRequest(BaseModel):
    operating_point: OperatingPointIn
    geometry: GeometryIn | None = None   # falls back to the stored geometry
    rules: list[RuleIn] | None = None    # falls back to the shipped defaults


class StatePointRequest(BaseModel):
    operating_point: OperatingPointIn
    model_id: str | None = None
    geometry: GeometryIn | None = None
    curve_points: int = 200


class CriticalRecycleRequest(BaseModel):
    Q_i: float
    X_f: float
    model_id: str | None = None
    geometry: GeometryIn | None = None


class MixerIn(BaseModel):
    id: str
    center: tuple[float, float, float]
    vertical_incl_deg: float
    azimuth_deg: float
    D_b: float
    L: float | None = None
    F0: float
    omega0: float
    omega: float
    rho: float


class MixerListRequest(BaseModel):
    mixers: list[MixerIn]


class TenLayerJobRequest(BaseModel):
    kind: str = Field("tenlayer", pattern="^tenlayer$")
    model_id: str | None = None
    geometry: GeometryIn | None = None
    operating_point: OperatingPointIn
    duration: float
    dt: float
    save_interval: float | None = None
    blanket_height: float = 0.0
    blanket_concentration: float = 0.0
    feed_layer: int | None = None
    x_threshold: float = 0.1
    sbh_threshold: float = 2.5
    inflow_dataset_id: str | None = None


class Asm1JobRequest(BaseModel):
    kind: str = Field(pattern="^(cstr|tanks)$")
    params_overrides: dict[str, float] | None = None
    q: float
    v: float | None = None               # cstr
    volumes: list[float] | None = None   # tanks
    n_tanks: int | None = None
    recycle: float = 0.0
    inflow: dict[str, float]
    init: dict[str, float]
    duration: float
    dt: float
    save_interval: float | None = None
    hold_so: float | None = None


class TransportExportRequest(BaseModel):
    D_T: float = 1e-9
    schmidt: dict[str, float] | None = None
    nu_t_field: str = "nut"
    velocity_field: str = "U"
    hydrodynamic_step: str | None = None
    params_overrides: dict[str, float] | None = None
