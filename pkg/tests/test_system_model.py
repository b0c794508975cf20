import numpy as np
import pytest

from mfris_ee.application.use_cases.experiment_use_cases import build_scenario
from mfris_ee.domain.entities.scenario import Space
from mfris_ee.domain.entities.solution import REPORT_COLUMNS, BeamformerSet, RisProfile, SolutionReport
from mfris_ee.domain.exceptions import DimensionMismatchError
from mfris_ee.infrastructure.evaluation.system_model import (
    effective_channel, empirical_outage, energy_efficiency, evaluate, rate_to_sinr, rates, ris_power,
    ris_power_vectorized, sinr, sinr_to_rate, total_power, worst_case_margin_bounded,
)
from mfris_ee.simulation_config import load_settings
from tests.helpers import random_complex


def _profile(rng, M, beta_max=4.0):
    beta = rng.uniform(0, beta_max / 2, size=(2, M))
    theta = rng.uniform(0, 2 * np.pi, size=(2, M))
    return RisProfile(beta=beta, theta=theta, beta_max=beta_max)


def _beams(rng, K, N, scale=0.1):
    return BeamformerSet(w=scale * random_complex(rng, K, N))


def test_effective_channel_without_surface_is_direct_link(rng):
    h = random_complex(rng, 3)
    F = random_complex(rng, 4, 3)
    assert np.array_equal(effective_channel(h, F, np.zeros(4)), h)


def test_effective_channel_matches_diagonal_form(rng):
    h, f = random_complex(rng, 3), random_complex(rng, 4)
    G = random_complex(rng, 4, 3)
    u = random_complex(rng, 4)
    F = np.diag(f) @ G
    assert np.allclose(effective_channel(h, F, u), h + f @ np.diag(u) @ G, atol=1e-12)


def test_single_element_cascade(rng):
    h, f, g = random_complex(rng, 2), random_complex(rng, 1), random_complex(rng, 1, 2)
    beta, theta = 2.0, 0.7
    u = np.array([np.sqrt(beta) * np.exp(1j * theta)])
    expected = h + np.sqrt(beta) * np.exp(1j * theta) * f[0] * g[0]
    assert np.allclose(effective_channel(h, f[:, None] * g, u), expected)


def test_effective_channel_checks_dimensions(rng):
    with pytest.raises(DimensionMismatchError):
        effective_channel(random_complex(rng, 3), random_complex(rng, 4, 2), random_complex(rng, 4))


def test_single_user_sinr_without_surface(tiny_settings, rng):
    settings = tiny_settings.updated("system", K_r=1, K_t=0)
    scenario = build_scenario(settings, "MF-RIS", "perfect", seed=1)
    beams = _beams(rng, 1, settings.system.N)
    off = RisProfile.off(settings.system.M, 4.0)
    h = scenario.channels.h[0]
    expected = abs(h @ beams.w[0]) ** 2 / scenario.params.sigma2_sq
    assert sinr(0, scenario, beams, off) == pytest.approx(expected, rel=1e-12)
    ee = energy_efficiency(scenario, beams, off)
    assert ee == pytest.approx(np.log2(1 + expected) / total_power(scenario.params, beams, off, scenario.channels.G))


def test_zero_beam_gives_zero_sinr(tiny_scenario, rng):
    beams = _beams(rng, 2, 3)
    w = beams.w.copy()
    w[1] = 0
    assert sinr(1, tiny_scenario, BeamformerSet(w=w), _profile(rng, 4)) == 0.0


def test_sinr_matches_brute_force_expansion(tiny_scenario, rng):
    beams = _beams(rng, 2, 3)
    ris = _profile(rng, 4)
    ch, p = tiny_scenario.channels, tiny_scenario.params
    for k, space in enumerate(tiny_scenario.spaces):
        theta = np.diag(ris.u(space))
        h_bar = ch.h[k] + ch.f[k] @ theta @ ch.G
        signal = abs(h_bar @ beams.w[k]) ** 2
        interference = sum(abs(h_bar @ beams.w[j]) ** 2 for j in range(2) if j != k)
        noise = np.linalg.norm(ch.f[k] @ theta) ** 2 * p.sigma1_sq + p.sigma2_sq
        assert sinr(k, tiny_scenario, beams, ris) == pytest.approx(signal / (interference + noise), rel=1e-12)


def test_rates_are_nonnegative_and_convert_back(tiny_scenario, rng):
    r = rates(tiny_scenario, _beams(rng, 2, 3), _profile(rng, 4))
    assert np.all(r >= 0)
    assert np.allclose(sinr_to_rate(rate_to_sinr(r)), r)


def test_static_floor(tiny_scenario):
    p = tiny_scenario.params
    zero = BeamformerSet(w=np.zeros((2, 3)))
    off = RisProfile.off(4, p.beta_max)
    floor = p.K * p.p_user + p.p_static + p.N * p.p_rf + 2 * p.M * (p.p_ps + p.p_pa)
    assert total_power(p, zero, off, tiny_scenario.channels.G) == pytest.approx(floor)
    assert energy_efficiency(tiny_scenario, zero, off) == 0.0


def test_full_scale_static_floor():
    params = load_settings(None, profile="paper", environ={}).to_system_params()
    # 6 x 10 dBm + 40 dBm + 6 x 30 dBm + 64 x (-10 dBm + -5 dBm)
    expected = 6 * 0.01 + 10.0 + 6 * 1.0 + 64 * (1e-4 + 10 ** -0.5 * 1e-3)
    assert params.static_power == pytest.approx(expected, rel=1e-12)


def test_transmit_term_scales_quadratically(tiny_scenario, rng):
    p = tiny_scenario.params
    beams = _beams(rng, 2, 3)
    off = RisProfile.off(4, p.beta_max)
    G = tiny_scenario.channels.G
    base = total_power(p, beams, off, G) - p.static_power
    doubled = total_power(p, beams.scaled(2.0), off, G) - p.static_power
    assert doubled == pytest.approx(4 * base)
    assert base == pytest.approx(p.xi * beams.transmit_power)


def test_surface_power_expansions_agree(tiny_scenario, rng):
    beams, ris = _beams(rng, 2, 3), _profile(rng, 4)
    p, G = tiny_scenario.params, tiny_scenario.channels.G
    assert ris_power(p, beams, ris, G) == pytest.approx(ris_power_vectorized(p, beams, ris, G), rel=1e-10)


def test_unserved_space_draws_no_surface_power(tiny_settings, rng):
    scenario = build_scenario(tiny_settings, "ACTIVE-RIS", "perfect", seed=1)
    beams = _beams(rng, 2, 3)
    beta = np.array([[1.0, 1.0, 1.0, 1.0], [2.0, 2.0, 2.0, 2.0]])
    ris = RisProfile(beta=beta, theta=np.zeros((2, 4)), beta_max=4.0)
    reflect_only = RisProfile(beta=beta * np.array([[1.0], [0.0]]), theta=np.zeros((2, 4)), beta_max=4.0)
    G = scenario.channels.G
    assert ris_power(scenario.params, beams, ris, G) == pytest.approx(
        ris_power(scenario.params, beams, reflect_only, G)
    )


@pytest.mark.parametrize("scheme", ["STAR-RIS", "SF-RIS"])
def test_passive_surface_adds_no_noise_and_draws_no_power(tiny_settings, rng, scheme):
    scenario = build_scenario(tiny_settings, scheme, "perfect", seed=1)
    p, ch = scenario.params, scenario.channels
    beams, ris = _beams(rng, 2, 3), _profile(rng, 4, beta_max=1.0)
    assert ris_power(p, beams, ris, ch.G) == 0.0
    assert ris_power_vectorized(p, beams, ris, ch.G) == 0.0
    assert "ris_power" not in evaluate(scenario, beams, ris).margins
    for k, space in enumerate(scenario.spaces):
        if not p.serves(space):
            continue
        h_bar = ch.h[k] + ch.f[k] @ np.diag(ris.u(space)) @ ch.G
        signal = abs(h_bar @ beams.w[k]) ** 2
        interference = sum(abs(h_bar @ beams.w[j]) ** 2 for j in range(2) if j != k)
        assert sinr(k, scenario, beams, ris) == pytest.approx(signal / (interference + p.sigma2_sq), rel=1e-12)


def test_ee_invariant_to_common_phase(tiny_scenario, rng):
    beams, ris = _beams(rng, 2, 3), _profile(rng, 4)
    rotated = BeamformerSet(w=beams.w * np.exp(1j * 1.3))
    assert energy_efficiency(tiny_scenario, rotated, ris) == pytest.approx(
        energy_efficiency(tiny_scenario, beams, ris), rel=1e-12
    )


def test_report_row_and_margins(tiny_scenario, rng):
    beams, ris = _beams(rng, 2, 3), _profile(rng, 4)
    report = evaluate(tiny_scenario, beams, ris, r_targets=[0.0, 0.0])
    row = report.to_row()
    assert tuple(row)[:len(REPORT_COLUMNS)] == REPORT_COLUMNS
    assert row["ee"] == pytest.approx(report.sum_rate / report.total_power)
    assert report.margins["rate_target"] >= 0
    assert "ris_power" in report.margins


def test_report_requires_positive_power():
    with pytest.raises(ValueError):
        SolutionReport(rates=np.zeros(1), transmit_power=0.0, ris_power=0.0, total_power=0.0)


def test_profile_rejects_excess_amplitude():
    with pytest.raises(ValueError):
        RisProfile(beta=np.array([[3.0], [2.0]]), theta=np.zeros((2, 1)), beta_max=4.0)


def test_beam_budget_is_checked():
    with pytest.raises(ValueError):
        BeamformerSet(w=np.ones((1, 2)), power_budget=1.0)


def test_outage_zero_for_zero_target(statistical_scenario, rng):
    beams, ris = _beams(rng, 2, 3), _profile(rng, 4)
    outage = empirical_outage(statistical_scenario, beams, ris, [0.0, 0.0], n=50, seed=3)
    assert np.all(outage == 0)


def test_outage_zero_without_errors(tiny_settings, rng):
    scenario = build_scenario(tiny_settings.updated("uncertainty", delta_h_sq=0.0, delta_f_sq=0.0, delta_G_sq=0.0),
                              "MF-RIS", "statistical", seed=2)
    beams, ris = _beams(rng, 2, 3), _profile(rng, 4)
    nominal = rates(scenario, beams, ris)
    assert np.all(empirical_outage(scenario, beams, ris, nominal * 0.999, n=20, seed=1) == 0)


def test_outage_matches_recount(statistical_scenario, rng):
    from mfris_ee.infrastructure.channels.scenario_generator import sample_error

    beams, ris = _beams(rng, 2, 3), _profile(rng, 4)
    targets = rates(statistical_scenario, beams, ris)
    p = statistical_scenario.params
    misses = np.zeros(2)
    for i in range(100):
        err = sample_error(statistical_scenario.uncertainty, p.N, p.M, [5, i])
        true = statistical_scenario.channels.perturbed(err.dh, err.df, err.dF, err.dG)
        misses += rates(statistical_scenario, beams, ris, true) < targets
    outage = empirical_outage(statistical_scenario, beams, ris, targets, n=100, seed=5)
    assert np.array_equal(outage, misses / 100)


def test_outage_needs_statistical_model(bounded_scenario, rng):
    with pytest.raises(ValueError):
        empirical_outage(bounded_scenario, _beams(rng, 2, 3), _profile(rng, 4), [0, 0], n=1, seed=0)


def test_zero_radius_margins_are_nominal(tiny_scenario, rng):
    beams, ris = _beams(rng, 2, 3), _profile(rng, 4)
    rate_margin, power_margin = worst_case_margin_bounded(tiny_scenario, beams, ris, [0.5, 0.5], n=10, seed=0)
    report = evaluate(tiny_scenario, beams, ris)
    assert rate_margin == pytest.approx(float(np.min(report.rates - 0.5)))
    assert power_margin == pytest.approx(tiny_scenario.params.p_ris_max - report.ris_power)


def test_sampled_margins_only_tighten(bounded_scenario, rng):
    beams, ris = _beams(rng, 2, 3), _profile(rng, 4)
    few = worst_case_margin_bounded(bounded_scenario, beams, ris, [0.1, 0.1], n=10, seed=4)
    many = worst_case_margin_bounded(bounded_scenario, beams, ris, [0.1, 0.1], n=40, seed=4)
    assert many[0] <= few[0] and many[1] <= few[1]
