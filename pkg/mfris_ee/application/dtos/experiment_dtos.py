from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

from ...domain.entities.scheme import Scheme
from ...infrastructure.solvers.factory import ERROR_MODELS

SWEEP_AXES = ("p_max_dbm", "M", "ris_x", "delta", "N", "K")
INTEGER_AXES = ("M", "N", "K")


class ExperimentConfig(BaseModel):
    axis: str
    values: List[float]
    schemes: List[str] = Field(default_factory=lambda: [Scheme.MF_RIS.value])
    error_models: List[str] = Field(default_factory=lambda: ["statistical"])
    seeds: Optional[int] = None
    seed_base: Optional[int] = None
    name: Optional[str] = None

    @field_validator("axis")
    @classmethod
    def validate_axis(cls, v):
        if v not in SWEEP_AXES:
            raise ValueError(f"Sweep axis must be one of {SWEEP_AXES}")
        return v

    @field_validator("values")
    @classmethod
    def validate_values(cls, v):
        if not v:
            raise ValueError("Sweep grid cannot be empty")
        return v

    @field_validator("schemes")
    @classmethod
    def validate_schemes(cls, v):
        if not v:
            raise ValueError("At least one scheme is required")
        return [Scheme.parse(tag).value for tag in v]

    @field_validator("error_models")
    @classmethod
    def validate_error_models(cls, v):
        if not v:
            raise ValueError("At least one error model is required")
        for model in v:
            if model not in ERROR_MODELS:
                raise ValueError(f"Unknown error model '{model}'")
        return v

    @field_validator("seeds")
    @classmethod
    def validate_seeds(cls, v):
        if v is not None and v < 1:
            raise ValueError("seeds must be at least 1")
        return v

    @property
    def file_stem(self) -> str:
        return self.name or f"sweep_{self.axis}"


class FeasibilityRequest(BaseModel):
    M_values: List[int] = Field(default_factory=lambda: [8])
    N_values: List[int] = Field(default_factory=lambda: [4])
    delta_values: List[float] = Field(default_factory=lambda: [0.0, 0.1])
    drops: int = 50
    seed_base: Optional[int] = None
    name: Optional[str] = None

    @field_validator("M_values", "N_values", "delta_values")
    @classmethod
    def validate_grid(cls, v):
        if not v:
            raise ValueError("Feasibility grids cannot be empty")
        return v

    @field_validator("M_values", "N_values")
    @classmethod
    def validate_dimensions(cls, v):
        if any(x < 1 for x in v):
            raise ValueError("M and N values must be positive")
        return v

    @field_validator("delta_values")
    @classmethod
    def validate_deltas(cls, v):
        # delta_h^2 = 2 delta^2 must stay below one
        if any(not 0 <= d < 0.5 ** 0.5 for d in v):
            raise ValueError("delta values must lie in [0, 1/sqrt(2))")
        return v

    @field_validator("drops")
    @classmethod
    def validate_drops(cls, v):
        if v < 1:
            raise ValueError("drops must be at least 1")
        return v


class ConvergenceRequest(BaseModel):
    K_values: List[int] = Field(default_factory=lambda: [1, 2])
    error_models: List[str] = Field(default_factory=lambda: ["bounded", "statistical"])
    seed: Optional[int] = None
    name: Optional[str] = None

    @field_validator("K_values")
    @classmethod
    def validate_users(cls, v):
        if not v or any(k < 1 for k in v):
            raise ValueError("K values must be positive")
        return v

    @field_validator("error_models")
    @classmethod
    def validate_error_models(cls, v):
        for model in v:
            if model not in ERROR_MODELS:
                raise ValueError(f"Unknown error model '{model}'")
        return v


class PlotRequest(BaseModel):
    csv_path: str
    kind: str = "summary"
    metric: str = "ee"

    @field_validator("kind")
    @classmethod
    def validate_kind(cls, v):
        if v not in ("summary", "feasibility", "convergence"):
            raise ValueError("Plots are drawn from summary, feasibility or convergence files")
        return v


class SweepResponse(BaseModel):
    config_hash: str
    runs_path: str
    summary_path: str
    rows: int
    failed_points: int
    summary: List[Dict[str, Any]]


class FeasibilityResponse(BaseModel):
    config_hash: str
    path: str
    failed_points: int
    table: List[Dict[str, Any]]


class ConvergenceResponse(BaseModel):
    config_hash: str
    path: str
    rows: int
    failed_points: int


class ComplexityResponse(BaseModel):
    N: int
    M: int
    K: int
    bounded_w: float
    bounded_theta: float
    statistical_w: float
    statistical_v: float
    block_sizes: Dict[str, int]


class SchemeResponse(BaseModel):
    tag: str
    ris_enabled: bool
    refraction_enabled: bool
    unit_amplitude: bool


class PlotResponse(BaseModel):
    images: List[str]
    series: List[str]
