"""Performance evaluation of a candidate (beams, surface) pair.

Rates are in bits/s/Hz everywhere; :func:`rate_to_sinr` and :func:`sinr_to_rate`
are the only places the base-2 conversion happens.
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from ...domain.entities.scenario import ChannelSet, ScenarioInstance, Space, SystemParams, UncertaintyKind
from ...domain.entities.solution import BeamformerSet, RisProfile, SolutionReport
from ...domain.exceptions import DimensionMismatchError
from ..channels.scenario_generator import sample_error

RATE_TOL = 1e-4
POWER_TOL = 1e-6


def sinr_to_rate(sinr):
    return np.log2(1.0 + np.asarray(sinr))


def rate_to_sinr(rate):
    return np.power(2.0, np.asarray(rate)) - 1.0


def effective_channel(h: np.ndarray, F: np.ndarray, u: np.ndarray) -> np.ndarray:
    """h + u^T F, i.e. direct link plus the surface cascade"""
    if F.shape != (u.shape[0], h.shape[0]):
        raise DimensionMismatchError(f"cascade {F.shape} does not match h {h.shape} and u {u.shape}")
    return h + u @ F


def surface_vector(params: SystemParams, ris: RisProfile, space: Space) -> np.ndarray:
    """Coefficients seen by users of ``space``; zero when the space is not served"""
    if not params.serves(space):
        return np.zeros(params.M, dtype=complex)
    return ris.u(space)


def sinr(
    k: int,
    scenario: ScenarioInstance,
    beams: BeamformerSet,
    ris: RisProfile,
    channels: Optional[ChannelSet] = None,
) -> float:
    channels = channels or scenario.channels
    params = scenario.params
    u = surface_vector(params, ris, scenario.spaces[k])
    h_bar = effective_channel(channels.h[k], channels.F[k], u)
    gains = np.abs(beams.w @ h_bar) ** 2
    signal = gains[k]
    interference = np.sum(gains) - signal
    amplified_noise = np.sum(np.abs(channels.f[k] * u) ** 2) * params.amplifier_noise_sq
    return float(signal / (interference + amplified_noise + params.sigma2_sq))


def rates(
    scenario: ScenarioInstance,
    beams: BeamformerSet,
    ris: RisProfile,
    channels: Optional[ChannelSet] = None,
) -> np.ndarray:
    return np.array(
        [sinr_to_rate(sinr(k, scenario, beams, ris, channels)) for k in range(scenario.params.K)]
    )


def ris_power(
    params: SystemParams,
    beams: BeamformerSet,
    ris: RisProfile,
    G: np.ndarray,
) -> float:
    """Power radiated by the surface amplifiers, summed over served spaces"""
    if not params.surface_budgeted:
        return 0.0
    W = beams.w.T
    total = 0.0
    for space in Space:
        if not params.serves(space):
            continue
        u = ris.u(space)
        total += np.linalg.norm(u[:, None] * (G @ W)) ** 2 + np.sum(np.abs(u) ** 2) * params.sigma1_sq
    return float(total)


def ris_power_vectorized(
    params: SystemParams,
    beams: BeamformerSet,
    ris: RisProfile,
    G: np.ndarray,
) -> float:
    """Same quantity written as y^H (S^T kron I_M) y with y = vec(Theta G) and S = sum w w^H"""
    if not params.surface_budgeted:
        return 0.0
    S = beams.w.T @ np.conj(beams.w)
    B = np.kron(S.T, np.eye(params.M))
    total = 0.0
    for space in Space:
        if not params.serves(space):
            continue
        u = ris.u(space)
        y = (u[:, None] * G).reshape(-1, order="F")
        total += np.real(np.conj(y) @ B @ y) + np.sum(np.abs(u) ** 2) * params.sigma1_sq
    return float(total)


def total_power(
    params: SystemParams,
    beams: BeamformerSet,
    ris: RisProfile,
    G: np.ndarray,
) -> float:
    return (
        params.xi * beams.transmit_power
        + params.zeta * ris_power(params, beams, ris, G)
        + params.static_power
    )


def energy_efficiency(
    scenario: ScenarioInstance,
    beams: BeamformerSet,
    ris: RisProfile,
    channels: Optional[ChannelSet] = None,
) -> float:
    channels = channels or scenario.channels
    return float(
        np.sum(rates(scenario, beams, ris, channels))
        / total_power(scenario.params, beams, ris, channels.G)
    )


def evaluate(
    scenario: ScenarioInstance,
    beams: BeamformerSet,
    ris: RisProfile,
    r_targets: Optional[Sequence[float]] = None,
) -> SolutionReport:
    """Nominal report on the estimated channels"""
    params = scenario.params
    G = scenario.channels.G
    achieved = rates(scenario, beams, ris)
    margins = {
        "bs_power": params.p_bs_max - beams.transmit_power,
        "rate_floor": float(np.min(achieved) - params.r_min),
    }
    if params.surface_budgeted:
        margins["ris_power"] = params.p_ris_max - ris_power(params, beams, ris, G)
    if r_targets is not None:
        margins["rate_target"] = float(np.min(achieved - np.asarray(r_targets)))
    return SolutionReport(
        rates=achieved,
        transmit_power=beams.transmit_power,
        ris_power=ris_power(params, beams, ris, G),
        total_power=total_power(params, beams, ris, G),
        margins=margins,
    )


def empirical_outage(
    scenario: ScenarioInstance,
    beams: BeamformerSet,
    ris: RisProfile,
    r_targets: Sequence[float],
    n: int,
    seed: int,
) -> np.ndarray:
    """Per-user fraction of sampled true channels whose rate falls below target"""
    model = scenario.uncertainty
    if model is None or model.kind is not UncertaintyKind.STATISTICAL:
        raise ValueError("empirical outage needs a statistical uncertainty model")
    params = scenario.params
    targets = np.asarray(r_targets, dtype=float)
    misses = np.zeros(params.K)
    for i in range(n):
        err = sample_error(model, params.N, params.M, [seed, i])
        true = scenario.channels.perturbed(err.dh, err.df, err.dF, err.dG)
        misses += rates(scenario, beams, ris, true) < targets
    return misses / n


def worst_case_margin_bounded(
    scenario: ScenarioInstance,
    beams: BeamformerSet,
    ris: RisProfile,
    r_targets: Sequence[float],
    n: int,
    seed: int,
) -> Tuple[float, float]:
    """Smallest rate margin and surface-power margin over sampled in-ball errors.

    Odd-numbered samples sit on the ball surfaces. Sample i depends only on
    (seed, i), so a larger ``n`` extends the same sample sequence.
    """
    model = scenario.uncertainty
    if model is not None and model.kind is not UncertaintyKind.BOUNDED:
        raise ValueError("worst-case margins need a bounded uncertainty model")
    params = scenario.params
    targets = np.asarray(r_targets, dtype=float)
    rate_margin = np.inf
    power_margin = np.inf
    for i in range(max(n, 1)):
        if model is None or model.is_zero:
            true = scenario.channels
        else:
            err = sample_error(model, params.N, params.M, [seed, i], boundary=bool(i % 2))
            true = scenario.channels.perturbed(err.dh, err.df, err.dF, err.dG)
        rate_margin = min(rate_margin, float(np.min(rates(scenario, beams, ris, true) - targets)))
        if params.surface_budgeted:
            power_margin = min(power_margin, params.p_ris_max - ris_power(params, beams, ris, true.G))
        else:
            power_margin = min(power_margin, params.p_bs_max - beams.transmit_power)
    return rate_margin, power_margin
