"""
Simulation settings: defaults, TOML files and MFRIS_ environment overrides.

Precedence, lowest first: profile defaults, the TOML file, environment variables
named ``MFRIS_<SECTION>__<FIELD>`` (a ``.env`` file is loaded first).
"""

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import toml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from .domain.entities.scenario import SystemParams
from .domain.entities.scheme import Scheme
from .domain.exceptions import SimulationError
from .infrastructure.channels.scenario_generator import LayoutSpec, dbm_to_watt

ENV_PREFIX = "MFRIS_"
PROFILES = ("desk", "paper")


class ConfigurationError(SimulationError):
    """Settings file or environment values are invalid"""


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class SystemSection(_Section):
    N: int = 6
    M: int = 32
    K_r: int = 3
    K_t: int = 3
    sigma1_dbm: float = -80.0
    sigma2_dbm: float = -80.0
    p_max_dbm: float = 30.0
    p_ps_dbm: float = -10.0
    p_pa_dbm: float = -5.0
    p_user_dbm: float = 10.0
    p_static_dbm: float = 40.0
    p_rf_dbm: float = 30.0
    xi: float = 1.1
    zeta: float = 1.1
    beta_max: float = 4.0
    r_min: float = 1.0

    @field_validator("N", "M")
    @classmethod
    def validate_dimension(cls, v):
        if v < 1:
            raise ValueError("antenna and element counts must be positive")
        return v

    @field_validator("K_r", "K_t")
    @classmethod
    def validate_users(cls, v):
        if v < 0:
            raise ValueError("user counts cannot be negative")
        return v


class GeometrySection(_Section):
    bs_pos: Tuple[float, float, float] = (0.0, 0.0, 10.0)
    ris_pos: Tuple[float, float, float] = (0.0, 35.0, 20.0)
    reflection_centre: Tuple[float, float, float] = (0.0, 30.0, 0.0)
    refraction_centre: Tuple[float, float, float] = (0.0, 40.0, 0.0)
    user_radius: float = 3.0
    rician_db: float = 3.0

    @field_validator("user_radius")
    @classmethod
    def validate_radius(cls, v):
        if v <= 0:
            raise ValueError("user radius must be positive")
        return v


class UncertaintySection(_Section):
    delta_h_sq: float = 0.02
    delta_f_sq: float = 0.01
    delta_G_sq: float = 0.01
    rho_q: float = 0.05
    rho: float = 0.05

    @field_validator("delta_h_sq", "delta_f_sq", "delta_G_sq")
    @classmethod
    def validate_level(cls, v):
        if not 0 <= v < 1:
            raise ValueError("squared uncertainty levels must lie in [0, 1)")
        return v

    @field_validator("rho_q", "rho")
    @classmethod
    def validate_probability(cls, v):
        if not 0 < v < 1:
            raise ValueError("probabilities must lie in (0, 1)")
        return v

    @property
    def deltas(self) -> Tuple[float, float, float]:
        return (self.delta_h_sq ** 0.5, self.delta_f_sq ** 0.5, self.delta_G_sq ** 0.5)


class BoundedSolverSection(_Section):
    eps1: float = 1e-4
    eps2: float = 1e-6
    lambda0: float = 1e-3
    lambda_growth: float = 10.0
    lambda_max: float = 1e4
    t_max: int = 30
    restarts: int = 3
    ao_max: int = 30
    ao_tol: float = 1e-4
    ris_error_bound: str = "spectral"

    @field_validator("ris_error_bound")
    @classmethod
    def validate_bound(cls, v):
        if v not in ("spectral", "frobenius_mean"):
            raise ValueError("ris_error_bound must be 'spectral' or 'frobenius_mean'")
        return v


class StatisticalSolverSection(_Section):
    zeta0: float = 0.1
    ratio_target: float = 0.999
    objective_tol: float = 1e-4
    rate_floor: float = 1e-3
    target_growth: float = 0.1
    srocr_max_iter: int = 40
    ao_max: int = 30
    ao_tol: float = 1e-4


class ConicSection(_Section):
    backend: str = "CLARABEL"
    fallbacks: Tuple[str, ...] = ("SCS",)
    max_iter: int = 200
    feas_tol: float = 1e-8
    verify_tol: float = 1e-7
    real_embedding: bool = False
    dump_dir: Optional[str] = None


class HarnessSection(_Section):
    seeds: int = 20
    seed_base: int = 0
    workers: int = 1
    output_dir: str = "results"
    audit_samples: int = 1000

    @field_validator("seeds", "workers")
    @classmethod
    def validate_positive(cls, v):
        if v < 1:
            raise ValueError("seeds and workers must be at least 1")
        return v


class SimulationSettings(_Section):
    profile: str = "paper"
    system: SystemSection = SystemSection()
    geometry: GeometrySection = GeometrySection()
    uncertainty: UncertaintySection = UncertaintySection()
    bounded_solver: BoundedSolverSection = BoundedSolverSection()
    statistical_solver: StatisticalSolverSection = StatisticalSolverSection()
    conic: ConicSection = ConicSection()
    harness: HarnessSection = HarnessSection()

    @model_validator(mode="after")
    def validate_profile(self):
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}")
        if self.system.K_r + self.system.K_t < 1:
            raise ValueError("at least one user is required")
        return self

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON dump; identical settings give identical hashes"""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def to_system_params(self, scheme: Union[Scheme, str] = Scheme.MF_RIS) -> SystemParams:
        """Physical parameters in watts with the scheme's overrides applied"""
        s = self.system
        p_total = dbm_to_watt(s.p_max_dbm)
        params = SystemParams(
            N=s.N,
            M=s.M,
            K_r=s.K_r,
            K_t=s.K_t,
            sigma1_sq=dbm_to_watt(s.sigma1_dbm),
            sigma2_sq=dbm_to_watt(s.sigma2_dbm),
            p_total_max=p_total,
            p_bs_max=p_total / 2,
            p_ris_max=p_total / 2,
            p_ps=dbm_to_watt(s.p_ps_dbm),
            p_pa=dbm_to_watt(s.p_pa_dbm),
            p_user=dbm_to_watt(s.p_user_dbm),
            p_static=dbm_to_watt(s.p_static_dbm),
            p_rf=dbm_to_watt(s.p_rf_dbm),
            xi=s.xi,
            zeta=s.zeta,
            beta_max=s.beta_max,
            r_min=s.r_min,
            rho=self.uncertainty.rho,
        )
        scheme = scheme if isinstance(scheme, Scheme) else Scheme.parse(scheme)
        return scheme.apply(params)

    def to_layout(self) -> LayoutSpec:
        g = self.geometry
        return LayoutSpec(
            bs_pos=g.bs_pos,
            ris_pos=g.ris_pos,
            reflection_centre=g.reflection_centre,
            refraction_centre=g.refraction_centre,
            user_radius=g.user_radius,
        )

    def updated(self, section: str, **changes) -> "SimulationSettings":
        """Copy with some fields of one section replaced (and re-validated)"""
        data = self.model_dump()
        data[section].update(changes)
        return SimulationSettings.model_validate(data)


_PROFILE_DEFAULTS: Dict[str, Dict[str, Dict[str, Any]]] = {
    "desk": {"system": {"N": 4, "M": 8, "K_r": 1, "K_t": 1}, "harness": {"seeds": 20}},
    "paper": {"system": {"N": 6, "M": 32, "K_r": 3, "K_t": 3}, "harness": {"seeds": 100}},
}


def _merge(base: Dict[str, Any], extra: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _env_overrides(environ: Dict[str, str]) -> Dict[str, Any]:
    sections: Dict[str, Dict[str, Any]] = {}
    for key, value in environ.items():
        if not key.startswith(ENV_PREFIX) or "__" not in key:
            continue
        section, _, name = key[len(ENV_PREFIX):].partition("__")
        section = section.lower()
        sections.setdefault(section, {})[_field_name(section, name)] = value
    return sections


def _field_name(section: str, name: str) -> str:
    # environment keys are upper case; fields such as K_r and M are not
    model = SimulationSettings.model_fields.get(section)
    if model is None:
        return name.lower()
    for field in model.annotation.model_fields:
        if field.lower() == name.lower():
            return field
    return name.lower()


def load_settings(
    path: Optional[Union[str, Path]] = None,
    profile: str = "desk",
    overrides: Optional[Dict[str, Dict[str, Any]]] = None,
    environ: Optional[Dict[str, str]] = None,
) -> SimulationSettings:
    """Validated settings for a profile, a TOML file, the environment and explicit overrides"""
    if profile not in PROFILES:
        raise ConfigurationError(f"Unknown profile '{profile}'")
    if environ is None:
        load_dotenv()
        environ = dict(os.environ)
    data: Dict[str, Any] = {"profile": profile, **_PROFILE_DEFAULTS[profile]}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"Settings file not found: {path}")
        try:
            data = _merge(data, toml.load(path))
        except toml.TomlDecodeError as exc:
            raise ConfigurationError(f"Invalid TOML in {path}: {exc}") from exc
    data = _merge(data, _env_overrides(environ))
    if overrides:
        data = _merge(data, overrides)
    try:
        return SimulationSettings.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(str(exc)) from exc
