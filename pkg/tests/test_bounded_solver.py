from types import SimpleNamespace

import numpy as np
import pytest

from mfris_ee.application.use_cases.experiment_use_cases import build_scenario
from mfris_ee.domain.entities.iterate import RunStatus
from mfris_ee.domain.entities.solution import BeamformerSet
from mfris_ee.infrastructure.evaluation.system_model import rates, sinr, worst_case_margin_bounded
from mfris_ee.infrastructure.solvers.bounded_solver import BoundedOptions, BoundedSolver
from mfris_ee.infrastructure.solvers.factory import bounded_options, build_solver
from mfris_ee.infrastructure.solvers.problem_data import NormalizedProblem, initial_point
from mfris_ee.infrastructure.solvers.statistical_solver import StatisticalSolver

FEASIBLE = (RunStatus.CONVERGED, RunStatus.MAX_ITER)


def test_options_validation():
    with pytest.raises(ValueError):
        BoundedOptions(ris_error_bound="loose")
    with pytest.raises(ValueError):
        BoundedOptions(lambda0=0.0)


def test_factory_picks_the_pipeline(settings):
    assert isinstance(build_solver(settings, "perfect"), BoundedSolver)
    assert isinstance(build_solver(settings, "bounded"), BoundedSolver)
    assert isinstance(build_solver(settings, "statistical"), StatisticalSolver)
    assert bounded_options(settings).ao_max == settings.bounded_solver.ao_max
    with pytest.raises(ValueError):
        build_solver(settings, "adversarial")


def test_normalized_problem_preserves_sinr(tiny_scenario, rng):
    problem = NormalizedProblem.from_scenario(tiny_scenario)
    w, u = initial_point(problem, tiny_scenario.seed)
    beams = BeamformerSet(w=w)
    profile = problem.profile(u)
    for k in range(problem.K):
        normalized = problem.signal(k, w, u) / problem.interference_plus_noise(k, w, u)
        assert normalized == pytest.approx(sinr(k, tiny_scenario, beams, profile), rel=1e-9)


def test_initial_point_meets_rate_floor(tiny_scenario):
    problem = NormalizedProblem.from_scenario(tiny_scenario)
    w, u = initial_point(problem, tiny_scenario.seed)
    params = tiny_scenario.params
    assert np.min(rates(tiny_scenario, BeamformerSet(w=w), problem.profile(u))) >= params.r_min
    assert np.sum(np.abs(w) ** 2) <= params.p_bs_max * (1 + 1e-9)


def test_init_slacks_sit_below_achieved_rates(tiny_scenario):
    problem = NormalizedProblem.from_scenario(tiny_scenario)
    it = BoundedSolver().init(problem)
    achieved = np.log2(1 + it.alpha / it.eta)
    assert np.all(it.r < achieved)
    assert it.psi == pytest.approx(np.sum(it.r) / it.varrho)


def _assert_monotone(result):
    psi = result.psi_trace()
    assert np.all(np.diff(psi) >= -1e-5 * (1 + np.abs(psi[:-1])))


@pytest.mark.slow
def test_perfect_csi_run(tiny_settings, tiny_scenario):
    result = build_solver(tiny_settings, "perfect").alternate(tiny_scenario)
    assert result.status in FEASIBLE
    params = tiny_scenario.params
    assert np.min(result.report.rates) >= params.r_min - 1e-4
    assert result.report.transmit_power <= params.p_bs_max * (1 + 1e-6)
    assert result.report.ris_power <= params.p_ris_max * (1 + 1e-6)
    assert result.report.ee > 0
    _assert_monotone(result)


@pytest.mark.slow
def test_bounded_run_holds_over_sampled_errors(tiny_settings, bounded_scenario):
    result = build_solver(tiny_settings, "bounded").alternate(bounded_scenario)
    if result.status not in FEASIBLE:
        pytest.skip(f"drop infeasible under the bounded model: {result.status.value}")
    _assert_monotone(result)
    rate_margin, power_margin = worst_case_margin_bounded(
        bounded_scenario, result.beams, result.ris, [bounded_scenario.params.r_min] * bounded_scenario.params.K,
        n=10_000, seed=11,
    )
    assert rate_margin >= -1e-4
    assert power_margin >= -1e-6 * bounded_scenario.params.p_ris_max


@pytest.mark.slow
def test_robustness_costs_energy_efficiency(tiny_settings, tiny_scenario, bounded_scenario):
    perfect = build_solver(tiny_settings, "perfect").alternate(tiny_scenario)
    robust = build_solver(tiny_settings, "bounded").alternate(bounded_scenario)
    if robust.status not in FEASIBLE:
        pytest.skip("drop infeasible under the bounded model")
    assert robust.report.ee <= perfect.report.ee * (1 + 1e-3)


@pytest.mark.slow
def test_no_ris_scheme_keeps_the_surface_off(tiny_settings):
    scenario = build_scenario(tiny_settings, "NO-RIS", "perfect", seed=7)
    result = build_solver(tiny_settings, "perfect").alternate(scenario)
    assert result.status in FEASIBLE
    assert np.all(result.ris.beta == 0)
    assert result.report.ris_power == 0
    assert all(row.half_step == "w" for row in result.trace)


def test_alternation_stops_once_the_realized_ee_settles(tiny_settings, monkeypatch):
    scenario = build_scenario(tiny_settings, "NO-RIS", "perfect", seed=7)
    solver = BoundedSolver(BoundedOptions(ao_max=6))

    def drifting_bound(it, problem):
        # the bound keeps climbing while the beams, and so the nominal EE, stay put
        return it.with_updates(psi=it.psi + 0.1, certified=True), SimpleNamespace(ok=True, status=None)

    monkeypatch.setattr(solver, "solve_w", drifting_bound)
    result = solver.alternate(scenario)
    assert result.status is RunStatus.CONVERGED
    assert result.iterations == 2
    ee = [row.ee for row in result.trace]
    assert ee[0] == pytest.approx(ee[1], rel=1e-12)
