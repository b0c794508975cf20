import numpy as np
import pytest

from mfris_ee.application.use_cases.experiment_use_cases import apply_axis, build_scenario
from mfris_ee.domain.entities.iterate import RunStatus
from mfris_ee.domain.exceptions import RankOneExtractionError
from mfris_ee.infrastructure.evaluation.system_model import empirical_outage
from mfris_ee.infrastructure.linalg.complex_linalg import outer
from mfris_ee.infrastructure.solvers.factory import build_solver, statistical_options
from mfris_ee.infrastructure.solvers.problem_data import NormalizedProblem, initial_point
from mfris_ee.infrastructure.solvers.statistical_solver import (
    StatisticalOptions, StatisticalSolver, extract_rank_one, srocr_update, trace_ratio,
)
from tests.helpers import random_complex

FEASIBLE = (RunStatus.CONVERGED, RunStatus.MAX_ITER)


def test_trace_ratio(rng):
    x = random_complex(rng, 4)
    assert trace_ratio(outer(x, x)) == pytest.approx(1.0)
    assert trace_ratio(np.eye(4)) == pytest.approx(0.25)
    assert trace_ratio(np.zeros((3, 3))) == 0.0


def test_srocr_update_is_capped():
    assert srocr_update(np.eye(4), 0.1) == pytest.approx(0.35)
    assert srocr_update(np.diag([1.0, 0.0]), 0.1, cap=0.9999) == pytest.approx(0.9999)


def test_extract_rank_one_recovers_the_outer_product(rng):
    x = random_complex(rng, 3)
    X = outer(x, x)
    v = extract_rank_one(X)
    assert np.allclose(outer(v, v), X, atol=1e-9)

    anchored = extract_rank_one(X, unit_last=True)
    assert anchored[-1] == pytest.approx(1.0)
    assert np.allclose(anchored, x / x[-1])


def test_extract_rank_one_rejects_spread_spectrum():
    with pytest.raises(RankOneExtractionError):
        extract_rank_one(np.eye(3), threshold=0.99)


def test_options_validation():
    with pytest.raises(ValueError):
        StatisticalOptions(ratio_target=1.5)
    with pytest.raises(ValueError):
        StatisticalOptions(zeta0=0.0)
    with pytest.raises(ValueError):
        StatisticalOptions(ratio_target=0.9, extraction_threshold=0.95)


def test_factory_maps_settings(settings):
    opts = statistical_options(settings)
    assert opts.zeta0 == settings.statistical_solver.zeta0
    assert opts.conic.backend == settings.conic.backend


def test_expected_power_includes_static_floor(statistical_scenario):
    problem = NormalizedProblem.from_scenario(statistical_scenario)
    solver = StatisticalSolver()
    zero = np.zeros((problem.K, problem.N), dtype=complex)
    _, u = initial_point(problem, statistical_scenario.seed)
    assert solver.expected_power(problem, zero, u) == pytest.approx(
        problem.params.static_power + problem.params.zeta * problem.params.sigma1_sq * np.sum(solver.surface_power(problem, u))
    )


def test_certified_rates_do_not_exceed_nominal(statistical_scenario):
    problem = NormalizedProblem.from_scenario(statistical_scenario)
    solver = StatisticalSolver()
    w, u = initial_point(problem, statistical_scenario.seed)
    certified = solver.certified_rates(problem, w, u)
    for k in range(problem.K):
        nominal = np.log2(1 + problem.signal(k, w, u) / problem.interference_plus_noise(k, w, u))
        assert 0 <= certified[k] <= nominal + 1e-6


@pytest.mark.slow
def test_statistical_run_meets_outage_target(tiny_settings, statistical_scenario):
    result = build_solver(tiny_settings, "statistical").alternate(statistical_scenario)
    if result.status not in FEASIBLE:
        pytest.skip(f"drop infeasible under the outage model: {result.status.value}")
    params = statistical_scenario.params
    assert np.min(result.certified_rates) >= params.r_min - 1e-4
    outage = empirical_outage(
        statistical_scenario, result.beams, result.ris, result.certified_rates, n=10_000, seed=5
    )
    assert np.all(outage <= params.rho)

    accepted = [row.psi for row in result.trace if row.half_step == "v" and row.status == "accepted"]
    assert np.all(np.diff(accepted) >= -1e-6)

    # the lifted matrices behind the kept solution are numerically rank one
    last = max(row.iteration for row in result.trace if row.half_step == "v" and row.status == "accepted")
    rows = [row for row in result.trace if row.iteration == last]
    w_ratio = [row.ratio_w_min for row in rows if row.half_step == "w"]
    v_ratio = [row.ratio_v for row in rows if row.half_step == "v" and row.ratio_v is not None]
    assert w_ratio and min(w_ratio) >= 0.999
    assert all(ratio >= 0.999 for ratio in v_ratio)


@pytest.mark.slow
def test_feasibility_check_without_error(tiny_settings):
    settings = apply_axis(tiny_settings, "delta", 0.0).updated("system", r_min=0.1)
    scenario = build_scenario(settings, "MF-RIS", "statistical", seed=3)
    outcome = StatisticalSolver(statistical_options(settings)).check_feasibility(scenario)
    assert outcome.feasible
