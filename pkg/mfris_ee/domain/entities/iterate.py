from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from .scenario import Space
from .solution import BeamformerSet, RisProfile, SolutionReport

TRACE_COLUMNS = (
    "iteration", "half_step", "psi", "ee", "penalty", "lambda", "status",
    "ratio_w_min", "ratio_v", "zeta",
)


class RunStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITER = "max-iter"
    INFEASIBLE = "infeasible"
    FAILED = "failed"


@dataclass
class TraceRow:
    iteration: int
    half_step: str
    psi: float
    ee: float
    status: str
    penalty: float = 0.0
    lam: Optional[float] = None
    ratio_w_min: Optional[float] = None
    ratio_v: Optional[float] = None
    zeta: Optional[float] = None

    def to_row(self) -> Dict[str, object]:
        return {
            "iteration": self.iteration,
            "half_step": self.half_step,
            "psi": self.psi,
            "ee": self.ee,
            "penalty": self.penalty,
            "lambda": self.lam,
            "status": self.status,
            "ratio_w_min": self.ratio_w_min,
            "ratio_v": self.ratio_v,
            "zeta": self.zeta,
        }


@dataclass
class BoundedIterate:
    """State carried between the beam and surface steps of the worst-case solver.

    Slack values are those of the last accepted conic solve; ``x2_bar`` and
    ``x3_bar`` are the expansion points of the exponential tangents.
    """

    w: np.ndarray
    u: Dict[Space, np.ndarray]
    psi: float
    varrho: float
    r: np.ndarray
    alpha: np.ndarray
    eta: np.ndarray
    x2_bar: np.ndarray
    x3_bar: np.ndarray
    multipliers: Dict[str, np.ndarray] = field(default_factory=dict)
    lam: float = 1e-3
    penalty: float = 0.0
    certified: bool = False

    def __post_init__(self):
        if self.psi < 0 or self.varrho < 0:
            raise ValueError("objective slacks cannot be negative")

    @property
    def t(self) -> float:
        """Bound parameter of the fractional objective, varrho / psi"""
        return self.varrho / max(self.psi, 1e-12)

    def with_updates(self, **changes) -> "BoundedIterate":
        return replace(self, **changes)


@dataclass
class StatisticalIterate:
    """Lifted beams and surfaces plus the SROCR bookkeeping of the outage solver"""

    W: np.ndarray
    V: Dict[Space, np.ndarray]
    targets: np.ndarray
    varrho: float
    ratio_w: np.ndarray
    ratio_v: Dict[Space, float] = field(default_factory=dict)
    zeta: float = 0.1
    growth: float = 0.1

    def __post_init__(self):
        if np.any(self.targets <= 0):
            raise ValueError("rate targets must be positive")
        if np.any(self.ratio_w < 0) or np.any(self.ratio_w > 1 + 1e-9):
            raise ValueError("trace ratios must lie in [0, 1]")

    @property
    def sum_target(self) -> float:
        return float(np.sum(self.targets))

    @property
    def psi(self) -> float:
        return self.sum_target / self.varrho

    def with_updates(self, **changes) -> "StatisticalIterate":
        return replace(self, **changes)


@dataclass
class RunResult:
    """Outcome of one alternating-optimization run"""

    status: RunStatus
    beams: Optional[BeamformerSet]
    ris: Optional[RisProfile]
    report: Optional[SolutionReport]
    trace: List[TraceRow] = field(default_factory=list)
    iterations: int = 0
    wall_time: float = 0.0
    flags: Tuple[str, ...] = ()
    certified_rates: Optional[np.ndarray] = None

    @property
    def feasible(self) -> bool:
        return self.status in (RunStatus.CONVERGED, RunStatus.MAX_ITER) and self.report is not None

    @property
    def ee(self) -> float:
        return self.report.ee if self.report is not None else float("nan")

    def psi_trace(self) -> np.ndarray:
        return np.array([row.psi for row in self.trace if row.status == "accepted"])
