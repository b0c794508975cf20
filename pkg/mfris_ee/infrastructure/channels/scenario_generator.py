"""Drop generation: geometry, Rician channels and CSI uncertainty models."""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.stats import chi2

from ...domain.entities.scenario import (
    ChannelSet,
    Geometry,
    LinkUncertainty,
    ScenarioInstance,
    Space,
    SystemParams,
    UncertaintyKind,
    UncertaintyModel,
    UserPlacement,
)
from ...logging_config import get_logger

logger = get_logger(__name__)

RICIAN_FACTOR_DB = 3.0


@dataclass(frozen=True)
class PathLossExponents:
    bs_ris: float = 2.2
    ris_user: float = 2.6
    bs_user: float = 2.8


@dataclass(frozen=True)
class LayoutSpec:
    """Where nodes sit; users are dropped on circles around the two centres"""

    bs_pos: Tuple[float, float, float] = (0.0, 0.0, 10.0)
    ris_pos: Tuple[float, float, float] = (0.0, 35.0, 20.0)
    reflection_centre: Tuple[float, float, float] = (0.0, 30.0, 0.0)
    refraction_centre: Tuple[float, float, float] = (0.0, 40.0, 0.0)
    user_radius: float = 3.0


@dataclass(frozen=True)
class ErrorSample:
    dh: np.ndarray
    df: np.ndarray
    dF: np.ndarray
    dG: np.ndarray


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def path_loss_db(d: float, alpha: float) -> float:
    """Large-scale attenuation with 30 dB loss at the 1 m reference distance"""
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    return -30.0 - 10.0 * alpha * np.log10(d)


def place_users(layout: LayoutSpec, K_r: int, K_t: int, seed: int) -> Geometry:
    """Uniform angles on the reflection and refraction circles"""
    rng = np.random.default_rng([seed, 0])
    users = []
    for space, count, centre in (
        (Space.REFLECTION, K_r, layout.reflection_centre),
        (Space.REFRACTION, K_t, layout.refraction_centre),
    ):
        angles = rng.uniform(0.0, 2 * np.pi, size=count)
        for angle in angles:
            position = np.asarray(centre, dtype=float) + layout.user_radius * np.array(
                [np.cos(angle), np.sin(angle), 0.0]
            )
            users.append(UserPlacement(position=position, space=space))
    return Geometry(
        bs_pos=np.asarray(layout.bs_pos, dtype=float),
        ris_pos=np.asarray(layout.ris_pos, dtype=float),
        users=tuple(users),
    )


def steering_vector(count: int, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Half-wavelength uniform linear array along x, unit-modulus entries"""
    direction = (dst - src) / np.linalg.norm(dst - src)
    return np.exp(1j * np.pi * np.arange(count) * direction[0])


def rician(los: np.ndarray, kappa: float, pl_db: float, rng: np.random.Generator) -> np.ndarray:
    nlos = (rng.standard_normal(los.shape) + 1j * rng.standard_normal(los.shape)) / np.sqrt(2)
    if np.isinf(kappa):
        mix = los
    else:
        mix = np.sqrt(kappa / (1 + kappa)) * los + np.sqrt(1 / (1 + kappa)) * nlos
    return np.sqrt(db_to_linear(pl_db)) * mix


def gen_channels(
    geometry: Geometry,
    params: SystemParams,
    kappa: float = db_to_linear(RICIAN_FACTOR_DB),
    seed: int = 0,
    exponents: PathLossExponents = PathLossExponents(),
) -> ChannelSet:
    """Rician channels with path loss; identical seeds give bit-identical sets"""
    if kappa < 0:
        raise ValueError("Rician factor cannot be negative")
    rng = np.random.default_rng([seed, 1])
    N, M = params.N, params.M
    bs, ris = geometry.bs_pos, geometry.ris_pos

    g_los = np.outer(steering_vector(M, bs, ris), np.conj(steering_vector(N, ris, bs)))
    G = rician(g_los, kappa, path_loss_db(np.linalg.norm(ris - bs), exponents.bs_ris), rng)

    h = np.empty((params.K, N), dtype=complex)
    f = np.empty((params.K, M), dtype=complex)
    for k, user in enumerate(geometry.users):
        h_los = steering_vector(N, bs, user.position)
        h[k] = rician(h_los, kappa, path_loss_db(np.linalg.norm(user.position - bs), exponents.bs_user), rng)
        f_los = steering_vector(M, ris, user.position)
        f[k] = rician(f_los, kappa, path_loss_db(np.linalg.norm(user.position - ris), exponents.ris_user), rng)
    return ChannelSet(G=G, h=h, f=f)


def statistical_variances(
    channels: ChannelSet, delta_h: float, delta_f: float, delta_G: float
) -> UncertaintyModel:
    """Error standard deviations proportional to the estimate norms.

    The cascade scale composes the other two through the triangle inequality on
    diag(f + df)(G + dG) - diag(f)G.
    """
    g_norm = np.linalg.norm(channels.G)
    varpi_G = delta_G * g_norm
    users = []
    for k in range(channels.K):
        varpi_h = delta_h * np.linalg.norm(channels.h[k])
        varpi_f = delta_f * np.linalg.norm(channels.f[k])
        varpi_F = varpi_G * np.linalg.norm(channels.f[k]) + varpi_f * g_norm + varpi_G * varpi_f
        users.append(LinkUncertainty(h=float(varpi_h), f=float(varpi_f), F=float(varpi_F)))
    return UncertaintyModel(
        kind=UncertaintyKind.STATISTICAL,
        delta_h=delta_h,
        delta_f=delta_f,
        delta_G=delta_G,
        users=tuple(users),
        G=float(varpi_G),
    )


def chi2_quantile(level: float, dof: int) -> float:
    if not 0 < level < 1:
        raise ValueError("quantile level must lie in (0, 1)")
    return float(chi2.ppf(level, dof))


def radius(varpi: float, rho_q: float, dof: int) -> float:
    return float(np.sqrt(varpi ** 2 / 2.0 * chi2_quantile(1.0 - rho_q, dof)))


def bounded_radii(model: UncertaintyModel, rho_q: float, N: int, M: int) -> UncertaintyModel:
    """Radii that contain the Gaussian error with probability 1 - rho_q"""
    if not 0 < rho_q < 1:
        raise ValueError("bounding probability must lie in (0, 1)")
    users = tuple(
        LinkUncertainty(
            h=radius(u.h, rho_q, 2 * N),
            f=radius(u.f, rho_q, 2 * M),
            F=radius(u.F, rho_q, 2 * M * N),
        )
        for u in model.users
    )
    return UncertaintyModel(
        kind=UncertaintyKind.BOUNDED,
        delta_h=model.delta_h,
        delta_f=model.delta_f,
        delta_G=model.delta_G,
        users=users,
        G=radius(model.G, rho_q, 2 * M * N),
        rho_q=rho_q,
    )


def _ball(rng: np.random.Generator, shape, r: float, boundary: bool) -> np.ndarray:
    if r == 0:
        return np.zeros(shape, dtype=complex)
    x = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    x /= np.linalg.norm(x)
    dim = 2 * int(np.prod(shape))
    scale = r if boundary else r * rng.uniform() ** (1.0 / dim)
    sample = scale * x
    assert np.linalg.norm(sample) <= r * (1 + 1e-12)
    return sample


def _gaussian(rng: np.random.Generator, shape, std: float) -> np.ndarray:
    if std == 0:
        return np.zeros(shape, dtype=complex)
    return std * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def sample_error(
    model: UncertaintyModel,
    N: int,
    M: int,
    seed,
    boundary: bool = False,
) -> ErrorSample:
    """One draw of (dh, df, dF, dG) from the model.

    Statistical models draw zero-mean CSCG entries; bounded models draw uniformly in
    each ball, or on its surface when ``boundary`` is set.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    K = len(model.users)
    dh = np.empty((K, N), dtype=complex)
    df = np.empty((K, M), dtype=complex)
    dF = np.empty((K, M, N), dtype=complex)
    if model.kind is UncertaintyKind.STATISTICAL:
        draw = lambda shape, s: _gaussian(rng, shape, s)
    else:
        draw = lambda shape, s: _ball(rng, shape, s, boundary)
    for k, u in enumerate(model.users):
        dh[k] = draw((N,), u.h)
        df[k] = draw((M,), u.f)
        dF[k] = draw((M, N), u.F)
    dG = draw((M, N), model.G)
    return ErrorSample(dh=dh, df=df, dF=dF, dG=dG)


class ScenarioFactory:
    """Builds reproducible drops from a fixed layout and parameter set"""

    def __init__(
        self,
        params: SystemParams,
        layout: LayoutSpec = LayoutSpec(),
        kappa_db: float = RICIAN_FACTOR_DB,
        exponents: PathLossExponents = PathLossExponents(),
    ):
        self._params = params
        self._layout = layout
        self._kappa = db_to_linear(kappa_db)
        self._exponents = exponents

    def generate(
        self,
        seed: int,
        error_model: str = "perfect",
        deltas: Sequence[float] = (np.sqrt(0.02), 0.1, 0.1),
        rho_q: float = 0.05,
        params: Optional[SystemParams] = None,
    ) -> ScenarioInstance:
        """One drop with estimated channels and the requested error model"""
        params = params or self._params
        geometry = place_users(self._layout, params.K_r, params.K_t, seed)
        channels = gen_channels(geometry, params, self._kappa, seed, self._exponents)
        delta_h, delta_f, delta_G = deltas
        uncertainty = None
        if error_model != "perfect":
            uncertainty = statistical_variances(channels, delta_h, delta_f, delta_G)
            if error_model == "bounded":
                uncertainty = bounded_radii(uncertainty, rho_q, params.N, params.M)
            elif error_model != "statistical":
                raise ValueError(f"Unknown error model '{error_model}'")
        logger.debug("scenario_generated", seed=seed, error_model=error_model, K=params.K)
        return ScenarioInstance(geometry, params, channels, uncertainty, seed)
