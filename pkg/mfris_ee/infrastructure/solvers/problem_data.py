"""Noise-normalized view of a scenario shared by both solvers, and the initial point.

Channels seen by users are divided by sigma2 so that the receiver noise is 1 and
SINR algebra stays O(1) for the interior-point backend. The BS-RIS channel and
the surface noise keep physical units, so beams and powers are in watts.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ...domain.entities.scenario import ScenarioInstance, Space, UncertaintyKind
from ...domain.entities.solution import BeamformerSet, RisProfile
from ...domain.exceptions import InfeasibleInitializationError
from ...logging_config import get_logger
from ..evaluation.system_model import rates, ris_power

logger = get_logger(__name__)

INIT_ATTEMPTS = 10
INIT_RIS_SHARE = 0.5


@dataclass(frozen=True)
class UserErrors:
    h: float
    f: float
    F: float


@dataclass(frozen=True)
class NormalizedProblem:
    scenario: ScenarioInstance
    h: np.ndarray
    f: np.ndarray
    F: np.ndarray
    G: np.ndarray
    s1: float
    errors: Tuple[UserErrors, ...]
    error_G: float

    @classmethod
    def from_scenario(cls, scenario: ScenarioInstance) -> "NormalizedProblem":
        params = scenario.params
        scale = 1.0 / np.sqrt(params.sigma2_sq)
        model = scenario.uncertainty
        if model is None:
            errors = tuple(UserErrors(0.0, 0.0, 0.0) for _ in range(params.K))
            error_G = 0.0
        else:
            errors = tuple(UserErrors(u.h * scale, u.f, u.F * scale) for u in model.users)
            error_G = model.G
        ch = scenario.channels
        return cls(
            scenario=scenario,
            h=ch.h * scale,
            f=ch.f.copy(),
            F=ch.F * scale,
            G=ch.G.copy(),
            s1=params.amplifier_noise_sq / params.sigma2_sq,
            errors=errors,
            error_G=error_G,
        )

    @property
    def params(self):
        return self.scenario.params

    @property
    def K(self) -> int:
        return self.params.K

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def M(self) -> int:
        return self.params.M

    @property
    def kind(self) -> Optional[UncertaintyKind]:
        model = self.scenario.uncertainty
        return None if model is None else model.kind

    @property
    def served_spaces(self) -> List[Space]:
        return [space for space in Space if self.params.serves(space)]

    def space_of(self, k: int) -> Space:
        return self.scenario.spaces[k]

    def serves_user(self, k: int) -> bool:
        return self.params.serves(self.space_of(k))

    def cascade(self, k: int) -> Optional[np.ndarray]:
        """Normalized cascade of user k, or None when its space is not served"""
        return self.F[k] if self.serves_user(k) else None

    def surface(self, k: int, u: Dict[Space, np.ndarray]) -> np.ndarray:
        if not self.serves_user(k):
            return np.zeros(self.M, dtype=complex)
        return u[self.space_of(k)]

    def effective(self, k: int, u: Dict[Space, np.ndarray]) -> np.ndarray:
        return self.h[k] + self.surface(k, u) @ self.F[k]

    def interference_plus_noise(self, k: int, w: np.ndarray, u: Dict[Space, np.ndarray]) -> float:
        h_bar = self.effective(k, u)
        gains = np.abs(w @ h_bar) ** 2
        amplified = self.s1 * np.sum(np.abs(self.f[k] * self.surface(k, u)) ** 2)
        return float(np.sum(gains) - gains[k] + amplified + 1.0)

    def signal(self, k: int, w: np.ndarray, u: Dict[Space, np.ndarray]) -> float:
        return float(np.abs(self.effective(k, u) @ w[k]) ** 2)

    def profile(self, u: Dict[Space, np.ndarray]) -> RisProfile:
        zeros = np.zeros(self.M, dtype=complex)
        return RisProfile.from_coefficients(
            u.get(Space.REFLECTION, zeros), u.get(Space.REFRACTION, zeros), self.params.beta_max
        )


def project_amplitudes(u: Dict[Space, np.ndarray], beta_max: float) -> Dict[Space, np.ndarray]:
    """Scale element pairs whose combined power gain exceeds beta_max, keeping phases"""
    total = sum(np.abs(v) ** 2 for v in u.values())
    if not u:
        return {}
    scale = np.ones_like(total)
    over = total > beta_max
    scale[over] = beta_max / total[over]
    return {space: np.sqrt(scale) * v for space, v in u.items()}


def mrt_beams(channels: np.ndarray, power: float) -> np.ndarray:
    """Equal-power maximum-ratio beams, one row per user"""
    K = channels.shape[0]
    norms = np.linalg.norm(channels, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return np.sqrt(power / K) * np.conj(channels) / norms


def zf_beams(channels: np.ndarray, power: float) -> np.ndarray:
    """Zero-forcing beams scaled to the power budget (requires K <= N)"""
    pinv = np.linalg.pinv(channels)
    w = pinv.T
    return w * np.sqrt(power / max(np.sum(np.abs(w) ** 2), 1e-30))


def _aligned_surface(problem: NormalizedProblem, space: Space, rng: Optional[np.random.Generator]) -> np.ndarray:
    users = problem.scenario.users_in(space)
    M = problem.M
    beta = problem.params.beta_max / 2.0
    if rng is not None or not users:
        phases = (rng or np.random.default_rng(0)).uniform(0, 2 * np.pi, M)
        return np.sqrt(beta) * np.exp(1j * phases)
    k = max(users, key=lambda j: np.linalg.norm(problem.F[j]))
    w = np.conj(problem.h[k]) / max(np.linalg.norm(problem.h[k]), 1e-30)
    direct = problem.h[k] @ w
    cascade = problem.F[k] @ w
    return np.sqrt(beta) * np.exp(1j * (np.angle(direct) - np.angle(cascade)))


def aligned_surfaces(problem: NormalizedProblem) -> Dict[Space, np.ndarray]:
    """Deterministic half-amplitude surfaces phase-aligned to each space's strongest user"""
    u = {space: _aligned_surface(problem, space, None) for space in problem.served_spaces}
    return project_amplitudes(u, problem.params.beta_max)


def initial_point(problem: NormalizedProblem, seed: int = 0) -> Tuple[np.ndarray, Dict[Space, np.ndarray]]:
    """Beams and surface coefficients meeting the rate floor on the estimated channels.

    The first attempt aligns every served space to its strongest user's cascade;
    later attempts draw random phases. Each attempt tries maximum-ratio and then
    zero-forcing beams at full power.
    """
    params = problem.params
    scenario = problem.scenario
    for attempt in range(INIT_ATTEMPTS):
        if attempt == 0:
            u = aligned_surfaces(problem)
        else:
            rng = np.random.default_rng([seed, 2, attempt])
            u = {space: _aligned_surface(problem, space, rng) for space in problem.served_spaces}
            u = project_amplitudes(u, params.beta_max)
        effective = np.array([problem.effective(k, u) for k in range(problem.K)])
        candidates = [mrt_beams(effective, params.p_bs_max)]
        if problem.K <= problem.N:
            candidates.append(zf_beams(effective, params.p_bs_max))
        for w in candidates:
            beams = BeamformerSet(w=w)
            u_fit = _fit_ris_power(problem, beams, u)
            profile = problem.profile(u_fit)
            achieved = rates(scenario, beams, profile)
            if np.min(achieved) >= params.r_min:
                logger.debug("initial_point_found", attempt=attempt, min_rate=float(np.min(achieved)))
                return w, u_fit
    raise InfeasibleInitializationError(
        f"no initial point reaches the {params.r_min} bits/s/Hz floor after {INIT_ATTEMPTS} attempts"
    )


def _fit_ris_power(problem: NormalizedProblem, beams: BeamformerSet, u: Dict[Space, np.ndarray]):
    """Shrink amplitudes until the surface uses at most a share of its budget"""
    params = problem.params
    if not u or not params.surface_budgeted:
        return u
    used = ris_power(params, beams, problem.profile(u), problem.G)
    limit = INIT_RIS_SHARE * params.p_ris_max
    if used <= limit:
        return u
    factor = np.sqrt(limit / used)
    return {space: factor * v for space, v in u.items()}
