from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..exceptions import DimensionMismatchError
from .scenario import Space

AMPLITUDE_TOL = 1e-9
POWER_TOL = 1e-9


@dataclass(frozen=True)
class RisProfile:
    """Per-element amplitude (power gain) and phase for both spaces.

    Row 0 of ``beta``/``theta`` is the reflection space, row 1 the refraction space.
    """

    beta: np.ndarray
    theta: np.ndarray
    beta_max: float

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 2 or beta.shape[0] != 2 or np.shape(self.theta) != beta.shape:
            raise DimensionMismatchError("beta and theta must both be 2 x M")
        if np.any(beta < -AMPLITUDE_TOL) or np.any(beta > self.beta_max + AMPLITUDE_TOL):
            raise ValueError("amplitudes must lie in [0, beta_max]")
        if np.any(beta.sum(axis=0) > self.beta_max + AMPLITUDE_TOL):
            raise ValueError("paired amplitudes exceed beta_max")
        object.__setattr__(self, "beta", np.clip(beta, 0.0, None))
        object.__setattr__(self, "theta", np.mod(np.asarray(self.theta, dtype=float), 2 * np.pi))

    @classmethod
    def from_coefficients(cls, u_r: np.ndarray, u_t: np.ndarray, beta_max: float) -> "RisProfile":
        u = np.vstack([u_r, u_t])
        return cls(beta=np.abs(u) ** 2, theta=np.angle(u), beta_max=beta_max)

    @classmethod
    def off(cls, M: int, beta_max: float) -> "RisProfile":
        return cls(beta=np.zeros((2, M)), theta=np.zeros((2, M)), beta_max=beta_max)

    @property
    def M(self) -> int:
        return self.beta.shape[1]

    def u(self, space: Space) -> np.ndarray:
        row = space.index
        return np.sqrt(self.beta[row]) * np.exp(1j * self.theta[row])

    def theta_matrix(self, space: Space) -> np.ndarray:
        return np.diag(self.u(space))

    def total_amplitude(self, space: Space) -> float:
        return float(self.beta[space.index].sum())


@dataclass(frozen=True)
class BeamformerSet:
    """Transmit beams, one row per user, plus optional lifted matrices"""

    w: np.ndarray
    lifted: Optional[np.ndarray] = None
    power_budget: Optional[float] = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=complex)
        if w.ndim != 2:
            raise DimensionMismatchError("beams must be a K x N array")
        object.__setattr__(self, "w", w)
        if self.lifted is not None:
            K, N = w.shape
            if np.shape(self.lifted) != (K, N, N):
                raise DimensionMismatchError("lifted beams must be K x N x N")
        if self.power_budget is not None and self.transmit_power > self.power_budget + POWER_TOL:
            raise ValueError(
                f"transmit power {self.transmit_power:.6g} W exceeds budget {self.power_budget:.6g} W"
            )

    @property
    def K(self) -> int:
        return self.w.shape[0]

    @property
    def N(self) -> int:
        return self.w.shape[1]

    @property
    def transmit_power(self) -> float:
        if self.lifted is not None:
            return float(sum(np.real(np.trace(W)) for W in self.lifted))
        return float(np.sum(np.abs(self.w) ** 2))

    def others(self, k: int, users) -> np.ndarray:
        """Beams of every listed user except k, stacked as columns (N x K')"""
        cols = [self.w[j] for j in users if j != k]
        if not cols:
            return np.zeros((self.N, 0), dtype=complex)
        return np.stack(cols, axis=1)

    def scaled(self, factor: float) -> "BeamformerSet":
        lifted = None if self.lifted is None else self.lifted * factor ** 2
        return BeamformerSet(w=self.w * factor, lifted=lifted)


REPORT_COLUMNS = (
    "ee", "sum_rate", "transmit_power", "ris_power", "total_power", "min_rate",
)


@dataclass(frozen=True)
class SolutionReport:
    """Evaluated performance of one candidate solution"""

    rates: np.ndarray
    transmit_power: float
    ris_power: float
    total_power: float
    margins: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.total_power <= 0:
            raise ValueError("total power must be strictly positive")

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.rates))

    @property
    def ee(self) -> float:
        return self.sum_rate / self.total_power

    def to_row(self) -> Dict[str, float]:
        """Flat CSV row in REPORT_COLUMNS order, margins appended as ``margin_<name>``"""
        row = {
            "ee": self.ee,
            "sum_rate": self.sum_rate,
            "transmit_power": self.transmit_power,
            "ris_power": self.ris_power,
            "total_power": self.total_power,
            "min_rate": float(np.min(self.rates)) if len(self.rates) else 0.0,
        }
        for name, value in sorted(self.margins.items()):
            row[f"margin_{name}"] = value
        return row
