from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict

from ..exceptions import UnknownSchemeError
from .scenario import SystemParams


class Scheme(str, Enum):
    """Surface variants compared by the experiment harness"""

    MF_RIS = "MF-RIS"
    STAR_RIS = "STAR-RIS"
    ACTIVE_RIS = "ACTIVE-RIS"
    SF_RIS = "SF-RIS"
    NO_RIS = "NO-RIS"

    @classmethod
    def parse(cls, tag: str) -> "Scheme":
        normalized = tag.strip().upper().replace("_", "-")
        for scheme in cls:
            if scheme.value == normalized:
                return scheme
        raise UnknownSchemeError(f"Unknown scheme '{tag}'")

    @property
    def overrides(self) -> "SchemeOverrides":
        return _OVERRIDES[self]

    def apply(self, params: SystemParams) -> SystemParams:
        """Constraint overrides implied by the scheme.

        Only amplifying surfaces split the total budget with the BS; passive
        surfaces and the direct-link baseline leave all of it to the BS.
        """
        o = self.overrides
        if not o.ris_enabled:
            return replace(
                params,
                p_bs_max=params.p_total_max,
                ris_enabled=False,
                refraction_enabled=False,
            )
        if o.unit_amplitude:
            return replace(
                params,
                beta_max=1.0,
                p_bs_max=params.p_total_max,
                ris_enabled=True,
                refraction_enabled=o.refraction_enabled,
                amplifying=False,
            )
        return replace(
            params,
            p_bs_max=params.p_total_max / 2,
            p_ris_max=params.p_total_max / 2,
            ris_enabled=True,
            refraction_enabled=o.refraction_enabled,
            amplifying=True,
        )


@dataclass(frozen=True)
class SchemeOverrides:
    ris_enabled: bool
    refraction_enabled: bool
    unit_amplitude: bool

    def describe(self) -> Dict[str, bool]:
        return {
            "ris_enabled": self.ris_enabled,
            "refraction_enabled": self.refraction_enabled,
            "unit_amplitude": self.unit_amplitude,
        }


_OVERRIDES = {
    Scheme.MF_RIS: SchemeOverrides(ris_enabled=True, refraction_enabled=True, unit_amplitude=False),
    Scheme.STAR_RIS: SchemeOverrides(ris_enabled=True, refraction_enabled=True, unit_amplitude=True),
    Scheme.ACTIVE_RIS: SchemeOverrides(ris_enabled=True, refraction_enabled=False, unit_amplitude=False),
    Scheme.SF_RIS: SchemeOverrides(ris_enabled=True, refraction_enabled=False, unit_amplitude=True),
    Scheme.NO_RIS: SchemeOverrides(ris_enabled=False, refraction_enabled=False, unit_amplitude=False),
}
