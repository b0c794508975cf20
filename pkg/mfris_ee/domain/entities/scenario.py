from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from ..exceptions import DimensionMismatchError


class Space(str, Enum):
    """Half-space served by the surface"""

    REFLECTION = "r"
    REFRACTION = "t"

    @property
    def index(self) -> int:
        return 0 if self is Space.REFLECTION else 1


class UncertaintyKind(str, Enum):
    BOUNDED = "bounded"
    STATISTICAL = "statistical"


@dataclass(frozen=True)
class UserPlacement:
    position: np.ndarray
    space: Space

    def __post_init__(self):
        if np.shape(self.position) != (3,):
            raise DimensionMismatchError("user position must be a 3-vector")


@dataclass(frozen=True)
class Geometry:
    """Node positions for one drop, in meters"""

    bs_pos: np.ndarray
    ris_pos: np.ndarray
    users: Tuple[UserPlacement, ...]

    def __post_init__(self):
        if np.shape(self.bs_pos) != (3,) or np.shape(self.ris_pos) != (3,):
            raise DimensionMismatchError("BS and RIS positions must be 3-vectors")
        if not self.users:
            raise ValueError("Geometry needs at least one user")

    @property
    def spaces(self) -> Tuple[Space, ...]:
        return tuple(user.space for user in self.users)

    def count(self, space: Space) -> int:
        return sum(1 for user in self.users if user.space is space)


@dataclass(frozen=True)
class SystemParams:
    """Physical and power-model constants, all powers in watts"""

    N: int
    M: int
    K_r: int
    K_t: int
    sigma1_sq: float
    sigma2_sq: float
    p_total_max: float
    p_bs_max: float
    p_ris_max: float
    p_ps: float
    p_pa: float
    p_user: float
    p_static: float
    p_rf: float
    xi: float = 1.1
    zeta: float = 1.1
    beta_max: float = 4.0
    r_min: float = 1.0
    rho: float = 0.05
    ris_enabled: bool = True
    refraction_enabled: bool = True
    amplifying: bool = True

    def __post_init__(self):
        if self.N < 1 or self.M < 1:
            raise ValueError("N and M must be positive")
        if self.K_r < 0 or self.K_t < 0 or self.K_r + self.K_t < 1:
            raise ValueError("at least one user is required")
        powers = (
            self.sigma1_sq, self.sigma2_sq, self.p_total_max, self.p_bs_max, self.p_ris_max,
            self.p_ps, self.p_pa, self.p_user, self.p_static, self.p_rf,
        )
        if any(p <= 0 for p in powers):
            raise ValueError("all powers must be strictly positive")
        if self.xi < 1 or self.zeta < 1:
            raise ValueError("inverse efficiencies must be at least 1")
        if self.beta_max < 1:
            raise ValueError("beta_max must be at least 1")
        if not 0 < self.rho < 1:
            raise ValueError("outage probability must lie in (0, 1)")
        if self.r_min < 0:
            raise ValueError("rate floor cannot be negative")

    @property
    def K(self) -> int:
        return self.K_r + self.K_t

    @property
    def active_elements(self) -> int:
        """Elements that draw circuit power (zero without a surface)"""
        return self.M if self.ris_enabled else 0

    @property
    def surface_budgeted(self) -> bool:
        """Whether the surface amplifiers draw from their own power budget"""
        return self.ris_enabled and self.amplifying

    @property
    def amplifier_noise_sq(self) -> float:
        # passive elements add no thermal noise of their own
        return self.sigma1_sq if self.surface_budgeted else 0.0

    @property
    def static_power(self) -> float:
        per_element = self.p_ps + (self.p_pa if self.amplifying else 0.0)
        return (
            self.K * self.p_user
            + self.p_static
            + self.N * self.p_rf
            + 2 * self.active_elements * per_element
        )

    def serves(self, space: Space) -> bool:
        """Whether the surface radiates into the given space"""
        if not self.ris_enabled:
            return False
        return space is Space.REFLECTION or self.refraction_enabled


@dataclass(frozen=True)
class ChannelSet:
    """Channel realizations; user k owns row k of ``h``, ``f`` and ``F``.

    ``h`` is K x N (BS-user), ``f`` is K x M (RIS-user), ``G`` is M x N (BS-RIS)
    and ``F[k] = diag(f[k]) G`` is the cascade.
    """

    G: np.ndarray
    h: np.ndarray
    f: np.ndarray
    F: np.ndarray = field(default=None)

    def __post_init__(self):
        M, N = np.shape(self.G)
        if np.ndim(self.h) != 2 or np.shape(self.h)[1] != N:
            raise DimensionMismatchError("h must be K x N")
        K = np.shape(self.h)[0]
        if np.shape(self.f) != (K, M):
            raise DimensionMismatchError("f must be K x M")
        if self.F is None:
            object.__setattr__(self, "F", cascade(self.f, self.G))
        elif np.shape(self.F) != (K, M, N):
            raise DimensionMismatchError("F must be K x M x N")

    @property
    def K(self) -> int:
        return self.h.shape[0]

    @property
    def N(self) -> int:
        return self.G.shape[1]

    @property
    def M(self) -> int:
        return self.G.shape[0]

    def is_cascade_consistent(self, tol: float = 1e-12) -> bool:
        expected = cascade(self.f, self.G)
        scale = 1.0 + np.max(np.abs(expected))
        return bool(np.max(np.abs(self.F - expected)) <= tol * scale)

    def perturbed(self, dh, df, dF, dG) -> "ChannelSet":
        """True channels given estimation errors; the cascade error is taken as given"""
        return ChannelSet(G=self.G + dG, h=self.h + dh, f=self.f + df, F=self.F + dF)


def cascade(f: np.ndarray, G: np.ndarray) -> np.ndarray:
    return f[:, :, None] * G[None, :, :]


@dataclass(frozen=True)
class LinkUncertainty:
    """Per-user error scales: standard deviations (statistical) or radii (bounded)"""

    h: float
    f: float
    F: float

    def __post_init__(self):
        if min(self.h, self.f, self.F) < 0:
            raise ValueError("uncertainty scales cannot be negative")


@dataclass(frozen=True)
class UncertaintyModel:
    kind: UncertaintyKind
    delta_h: float
    delta_f: float
    delta_G: float
    users: Tuple[LinkUncertainty, ...]
    G: float
    rho_q: Optional[float] = None

    def __post_init__(self):
        for delta in (self.delta_h, self.delta_f, self.delta_G):
            if not 0 <= delta < 1:
                raise ValueError("uncertainty levels must lie in [0, 1)")
        if self.G < 0:
            raise ValueError("uncertainty scales cannot be negative")

    @property
    def is_zero(self) -> bool:
        return self.G == 0 and all(u.h == 0 and u.f == 0 and u.F == 0 for u in self.users)

    def scaled(self, factor: float) -> "UncertaintyModel":
        """Same model with every scale multiplied by ``factor``"""
        return UncertaintyModel(
            kind=self.kind,
            delta_h=self.delta_h,
            delta_f=self.delta_f,
            delta_G=self.delta_G,
            users=tuple(LinkUncertainty(u.h * factor, u.f * factor, u.F * factor) for u in self.users),
            G=self.G * factor,
            rho_q=self.rho_q,
        )


@dataclass(frozen=True)
class ScenarioInstance:
    """Everything needed to solve one drop"""

    geometry: Geometry
    params: SystemParams
    channels: ChannelSet
    uncertainty: Optional[UncertaintyModel] = None
    seed: int = 0

    def __post_init__(self):
        if self.channels.K != self.params.K or len(self.geometry.users) != self.params.K:
            raise DimensionMismatchError("user counts of geometry, params and channels differ")
        if self.channels.N != self.params.N or self.channels.M != self.params.M:
            raise DimensionMismatchError("channel dimensions do not match N and M")
        if self.uncertainty is not None and len(self.uncertainty.users) != self.params.K:
            raise DimensionMismatchError("uncertainty model must cover every user")

    @property
    def spaces(self) -> Tuple[Space, ...]:
        return self.geometry.spaces

    def users_in(self, space: Space) -> Tuple[int, ...]:
        return tuple(k for k, s in enumerate(self.spaces) if s is space)

    def with_uncertainty(self, uncertainty: Optional[UncertaintyModel]) -> "ScenarioInstance":
        return ScenarioInstance(self.geometry, self.params, self.channels, uncertainty, self.seed)

    def with_params(self, params: SystemParams) -> "ScenarioInstance":
        return ScenarioInstance(self.geometry, params, self.channels, self.uncertainty, self.seed)
