from ...domain.interfaces.solvers import IRobustSolver
from ...simulation_config import SimulationSettings
from ..conic.program import ConicOptions
from .bounded_solver import BoundedOptions, BoundedSolver
from .statistical_solver import StatisticalOptions, StatisticalSolver

ERROR_MODELS = ("perfect", "bounded", "statistical")


def conic_options(settings: SimulationSettings) -> ConicOptions:
    c = settings.conic
    return ConicOptions(
        backend=c.backend,
        fallbacks=tuple(c.fallbacks),
        max_iter=c.max_iter,
        feas_tol=c.feas_tol,
        verify_tol=c.verify_tol,
        real_embedding=c.real_embedding,
        dump_dir=c.dump_dir,
    )


def bounded_options(settings: SimulationSettings) -> BoundedOptions:
    b = settings.bounded_solver
    return BoundedOptions(
        eps1=b.eps1,
        eps2=b.eps2,
        lambda0=b.lambda0,
        lambda_growth=b.lambda_growth,
        lambda_max=b.lambda_max,
        t_max=b.t_max,
        restarts=b.restarts,
        ao_max=b.ao_max,
        ao_tol=b.ao_tol,
        ris_error_bound=b.ris_error_bound,
        conic=conic_options(settings),
    )


def statistical_options(settings: SimulationSettings) -> StatisticalOptions:
    s = settings.statistical_solver
    return StatisticalOptions(
        zeta0=s.zeta0,
        ratio_target=s.ratio_target,
        objective_tol=s.objective_tol,
        rate_floor=s.rate_floor,
        target_growth=s.target_growth,
        srocr_max_iter=s.srocr_max_iter,
        ao_max=s.ao_max,
        ao_tol=s.ao_tol,
        conic=conic_options(settings),
    )


def build_solver(settings: SimulationSettings, error_model: str) -> IRobustSolver:
    """Solver for an error model; the perfect-CSI reference runs the worst-case pipeline with zero radii"""
    if error_model not in ERROR_MODELS:
        raise ValueError(f"Unknown error model '{error_model}'")
    if error_model == "statistical":
        return StatisticalSolver(statistical_options(settings))
    return BoundedSolver(bounded_options(settings))
