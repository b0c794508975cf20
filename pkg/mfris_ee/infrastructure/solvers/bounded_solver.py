"""Worst-case energy-efficiency solver for norm-bounded CSI errors.

Alternates a beamforming step, where the surface is fixed, with a penalty
convex-concave surface step, where the beams are fixed. Both steps maximize
the EE lower bound ``psi`` subject to

* ``sum(r) >= t/2 psi^2 + varrho^2/(2t)``, which upper-bounds ``psi * varrho``;
* ``alpha >= exp(x1)``, ``x1 - x2 >= x3`` and tangent bounds on ``eta <= exp(x2)``
  and ``2^r - 1 <= exp(x3)``, so that ``alpha / eta >= 2^r - 1``;
* robust LMIs making ``alpha`` a worst-case signal level and ``eta`` a worst-case
  interference-plus-noise level;
* robust surface-power and total-power LMIs, and the transmit budget.
"""

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import cvxpy as cp
import numpy as np

from ...domain.entities.iterate import BoundedIterate, RunResult, RunStatus, TraceRow
from ...domain.entities.scenario import ScenarioInstance, Space
from ...domain.entities.solution import BeamformerSet, RisProfile
from ...domain.exceptions import InfeasibleInitializationError
from ...domain.interfaces.solvers import IRobustSolver
from ...logging_config import get_logger
from ..conic.program import ConicOptions, ConicProgram, SolveReport
from ..evaluation.system_model import evaluate, total_power
from ..robust.robustify import (
    build_interference_lmi,
    build_noise_lmi,
    build_ris_power_lmi,
    build_signal_lmi,
    build_total_power_lmi,
    cub,
    exp_tangent,
    ris_error_radius_sq,
)
from .problem_data import NormalizedProblem, initial_point, project_amplitudes

logger = get_logger(__name__)

LN2 = float(np.log(2.0))
INIT_RATE_MARGIN = 0.95
ACCEPT_TOL = 1e-8
CUB_RANGE = (1e-8, 1e8)


@dataclass(frozen=True)
class BoundedOptions:
    eps1: float = 1e-4
    eps2: float = 1e-6
    lambda0: float = 1e-3
    lambda_growth: float = 10.0
    lambda_max: float = 1e4
    t_max: int = 30
    restarts: int = 3
    ao_max: int = 30
    ao_tol: float = 1e-4
    ris_error_bound: str = "spectral"
    conic: ConicOptions = field(default_factory=ConicOptions)

    def __post_init__(self):
        if self.ris_error_bound not in ("spectral", "frobenius_mean"):
            raise ValueError(f"Unknown surface error bound '{self.ris_error_bound}'")
        if not 0 < self.lambda0 <= self.lambda_max:
            raise ValueError("penalty factors must satisfy 0 < lambda0 <= lambda_max")


@dataclass
class ThetaOutcome:
    iterate: BoundedIterate
    accepted: bool
    penalty: float
    lam: float
    iterations: int
    restarts: int
    flags: Tuple[str, ...] = ()


def _bound_parameter(y: float, x: float) -> float:
    """t that makes cub(x, y, t) tight at the previous point"""
    if x <= 0:
        return CUB_RANGE[1]
    return float(np.clip(y / x, *CUB_RANGE))


def _columns(W, indices: List[int], N: int):
    if not indices:
        return np.zeros((N, 0), dtype=complex)
    if isinstance(W, np.ndarray):
        return W[:, indices]
    return cp.hstack([cp.reshape(W[:, j], (N, 1), order="F") for j in indices])


class _RateSlacks:
    """Scalar slacks shared by both subproblems"""

    def __init__(self, prog: ConicProgram, K: int):
        self.psi = prog.add_scalar("psi", nonneg=True)
        self.varrho = prog.add_scalar("varrho", nonneg=True)
        self.r = prog.add_vector("r", K)
        self.alpha = prog.add_vector("alpha", K, nonneg=True)
        self.eta = prog.add_vector("eta", K, nonneg=True)
        self.noise = prog.add_vector("noise", K, nonneg=True)
        self.x1 = prog.add_vector("x1", K)
        self.x2 = prog.add_vector("x2", K)
        self.x3 = prog.add_vector("x3", K)
        self.omega_h = prog.add_vector("omega_h", K, nonneg=True)
        self.omega_F = prog.add_vector("omega_F", K, nonneg=True)
        self.upsilon_h = prog.add_vector("upsilon_h", K, nonneg=True)
        self.upsilon_F = prog.add_vector("upsilon_F", K, nonneg=True)
        self.upsilon_f = prog.add_vector("upsilon_f", K, nonneg=True)

    def add_rate_chain(self, prog: ConicProgram, it: BoundedIterate, r_min: float) -> None:
        K = it.r.shape[0]
        for k in range(K):
            prog.add_exp(f"alpha_exp:{k}", self.alpha[k], self.x1[k])
            prog.add_linear(f"sinr_split:{k}", self.x1[k] - self.x2[k] >= self.x3[k])
            prog.add_linear(f"eta_tangent:{k}", self.eta[k] <= exp_tangent(self.x2[k], it.x2_bar[k]))
            prog.add_convex(
                f"rate_tangent:{k}", cp.exp(LN2 * self.r[k]) - 1 <= exp_tangent(self.x3[k], it.x3_bar[k])
            )
            prog.add_linear(f"rate_floor:{k}", self.r[k] >= r_min)
        prog.add_convex("fractional_bound", cub(self.psi, self.varrho, it.t) <= cp.sum(self.r))

    def multipliers(self, report: SolveReport) -> Dict[str, np.ndarray]:
        names = ("omega_h", "omega_F", "upsilon_h", "upsilon_F", "upsilon_f")
        return {name: np.real(report[name]) for name in names}


class BoundedSolver(IRobustSolver):
    """Alternating optimization under the norm-bounded error model"""

    def __init__(self, options: BoundedOptions = BoundedOptions()):
        self._options = options

    @property
    def options(self) -> BoundedOptions:
        return self._options

    # ----------------------------------------------------------------- initial point
    def init(self, problem: NormalizedProblem, seed: Optional[int] = None) -> BoundedIterate:
        """Feasible nominal start; slacks sit 5% below the achieved rates"""
        seed = problem.scenario.seed if seed is None else seed
        w, u = initial_point(problem, seed)
        K = problem.K
        signal = np.array([problem.signal(k, w, u) for k in range(K)])
        eta = np.array([problem.interference_plus_noise(k, w, u) for k in range(K)])
        r0 = INIT_RATE_MARGIN * np.log2(1.0 + signal / eta)
        power = total_power(problem.params, BeamformerSet(w=w), problem.profile(u), problem.G)
        return BoundedIterate(
            w=w,
            u=u,
            psi=float(np.sum(r0) / power),
            varrho=float(power),
            r=r0,
            alpha=signal,
            eta=eta,
            x2_bar=np.log(eta),
            x3_bar=np.log(np.power(2.0, r0) - 1.0),
            lam=self._options.lambda0,
        )

    # -------------------------------------------------------------------- beam step
    def solve_w(self, it: BoundedIterate, problem: NormalizedProblem) -> Tuple[BoundedIterate, SolveReport]:
        """Robust beamforming with the surface fixed; returns the previous iterate on failure"""
        params = problem.params
        K, N = problem.K, problem.N
        prog = ConicProgram("w_step")
        W = prog.add_matrix("W", N, K, complex=True)
        s = _RateSlacks(prog, K)

        for k in range(K):
            err = problem.errors[k]
            F_k = problem.cascade(k)
            u_k = problem.surface(k, it.u) if F_k is not None else None
            build_signal_lmi(
                it.w[k], u_k, W[:, k], u_k, problem.h[k], F_k, err.h, err.F,
                s.alpha[k], s.omega_h[k], s.omega_F[k] if F_k is not None else None, name=f"signal:{k}",
            ).register(prog)
            others = _columns(W, [j for j in range(K) if j != k], N)
            build_interference_lmi(
                others, u_k, problem.h[k], F_k, err.h, err.F, s.eta[k], s.noise[k], 1.0,
                s.upsilon_h[k], s.upsilon_F[k] if F_k is not None else None, name=f"interference:{k}",
            ).register(prog)
            self._noise_constraint(prog, problem, k, u_k, s)

        surfaces = [it.u[space] for space in problem.served_spaces]
        self._power_constraints(prog, problem, surfaces, W, s.varrho, surfaces_fixed=True)
        prog.add_convex("bs_power", cp.sum_squares(W) <= params.p_bs_max)
        s.add_rate_chain(prog, it, params.r_min)
        prog.maximize(s.psi)

        report = prog.solve(self._options.conic)
        if not report.ok:
            logger.warning("w_step_failed", status=report.status.value, diagnostics=report.diagnostics)
            return it, report
        psi = float(report["psi"])
        if it.certified and psi < it.psi - ACCEPT_TOL:
            logger.info("w_step_rejected", psi=psi, previous=it.psi)
            return it, report
        updated = it.with_updates(
            w=np.asarray(report["W"]).T.copy(),
            psi=max(psi, 0.0),
            varrho=float(report["varrho"]),
            r=np.real(report["r"]),
            alpha=np.real(report["alpha"]),
            eta=np.real(report["eta"]),
            x2_bar=np.real(report["x2"]),
            x3_bar=np.real(report["x3"]),
            multipliers={**it.multipliers, **s.multipliers(report), **self._power_multipliers(report, problem)},
            certified=True,
        )
        logger.info("w_step_solved", psi=updated.psi, iterations=report.iterations, backend=report.backend)
        return updated, report

    # ----------------------------------------------------------------- surface step
    def solve_theta_pccp(self, it: BoundedIterate, problem: NormalizedProblem) -> ThetaOutcome:
        """Penalty convex-concave refinement of the surface with the beams fixed"""
        opts = self._options
        if not problem.served_spaces:
            return ThetaOutcome(it, False, 0.0, opts.lambda0, 0, 0)
        best: Optional[BoundedIterate] = None
        total_iterations = 0
        flags: List[str] = []
        lam, penalty = opts.lambda0, np.inf
        for attempt in range(opts.restarts + 1):
            if attempt == 0:
                u_hat = dict(it.u)
            else:
                rng = np.random.default_rng([problem.scenario.seed, 3, attempt])
                beta = problem.params.beta_max / 2.0
                u_hat = {
                    space: np.sqrt(beta) * np.exp(1j * rng.uniform(0, 2 * np.pi, problem.M))
                    for space in problem.served_spaces
                }
                u_hat = project_amplitudes(u_hat, problem.params.beta_max)
                logger.info("pccp_restart", attempt=attempt, seed=problem.scenario.seed)
            state = it.with_updates(u=u_hat)
            lam = opts.lambda0
            converged = False
            for _ in range(opts.t_max):
                total_iterations += 1
                report, candidate, penalty = self._theta_iteration(state, problem, lam)
                if report is None:
                    break
                step = sum(np.sum(np.abs(candidate.u[c] - state.u[c])) for c in problem.served_spaces)
                state = candidate
                lam = min(opts.lambda_growth * lam, opts.lambda_max)
                logger.debug("pccp_iteration", step=step, penalty=penalty, lam=lam, psi=state.psi)
                if step <= opts.eps1 and penalty <= opts.eps2:
                    converged = True
                    break
            if converged:
                best = state
                break
        if best is None:
            flags.append("pccp_restart_budget_exhausted")
            logger.warning("pccp_no_convergence", restarts=opts.restarts)
            return ThetaOutcome(it, False, float(penalty), lam, total_iterations, opts.restarts, tuple(flags))

        projected = project_amplitudes(best.u, problem.params.beta_max)
        best = best.with_updates(u=projected, lam=lam, penalty=float(penalty))
        if best.psi < it.psi - ACCEPT_TOL:
            logger.info("theta_step_rejected", psi=best.psi, previous=it.psi)
            return ThetaOutcome(it, False, float(penalty), lam, total_iterations, attempt, ("psi_decrease",))
        return ThetaOutcome(best, True, float(penalty), lam, total_iterations, attempt, tuple(flags))

    def _theta_iteration(self, it: BoundedIterate, problem: NormalizedProblem, lam: float):
        params = problem.params
        K, N, M = problem.K, problem.N, problem.M
        opts = self._options
        prog = ConicProgram("theta_step")
        s = _RateSlacks(prog, K)
        W = it.w.T
        u_var: Dict[Space, cp.Variable] = {}
        b: Dict[Space, cp.Variable] = {}
        d: Dict[Space, cp.Variable] = {}
        d_hat: Dict[Space, cp.Variable] = {}
        for space in problem.served_spaces:
            tag = space.value
            u_var[space] = prog.add_vector(f"u:{tag}", M, complex=True)
            b[space] = prog.add_vector(f"b:{tag}", M, nonneg=True)
            d[space] = prog.add_vector(f"d:{tag}", M, nonneg=True)
            d_hat[space] = prog.add_vector(f"d_hat:{tag}", M, nonneg=True)
            u0 = it.u[space]
            prog.add_convex(f"amp_upper:{tag}", cp.square(cp.abs(u_var[space])) <= b[space] + d[space])
            prog.add_linear(
                f"amp_lower:{tag}",
                2 * cp.real(cp.multiply(np.conj(u0), u_var[space])) - np.abs(u0) ** 2 >= b[space] - d_hat[space],
            )
            prog.add_linear(f"amp_max:{tag}", b[space] <= params.beta_max)
        prog.add_linear("amp_pair", sum(b.values()) <= params.beta_max)

        g_F = prog.add_vector("cascade_bound", K, nonneg=True)
        ups_prev = it.multipliers.get("upsilon_F", np.zeros(K))
        for k in range(K):
            err = problem.errors[k]
            F_k = problem.cascade(k)
            space = problem.space_of(k)
            u_k = u_var.get(space) if F_k is not None else None
            u0 = it.u.get(space) if F_k is not None else None
            build_signal_lmi(
                it.w[k], u0, it.w[k], u_k, problem.h[k], F_k, err.h, err.F,
                s.alpha[k], s.omega_h[k], s.omega_F[k] if F_k is not None else None, name=f"signal:{k}",
            ).register(prog)
            others = _columns(W, [j for j in range(K) if j != k], N)
            penalty = None
            if F_k is not None:
                q = cp.sum(b[space] + d[space])
                t = _bound_parameter(float(np.sum(np.abs(u0) ** 2)), float(ups_prev[k]))
                prog.add_convex(f"cascade_cub:{k}", cub(s.upsilon_F[k], q, t) <= g_F[k])
                penalty = g_F[k]
            build_interference_lmi(
                others, u_k, problem.h[k], F_k, err.h, err.F, s.eta[k], s.noise[k], 1.0,
                s.upsilon_h[k], s.upsilon_F[k] if F_k is not None else None,
                cascade_penalty=penalty, name=f"interference:{k}",
            ).register(prog)
            self._noise_constraint(prog, problem, k, u_k, s)

        surfaces = [u_var[space] for space in problem.served_spaces]
        self._power_constraints(
            prog, problem, surfaces, W, s.varrho, surfaces_fixed=False,
            amplitude_bounds=[b[c] + d[c] for c in problem.served_spaces], it=it,
        )
        s.add_rate_chain(prog, it, params.r_min)
        violation = sum(cp.sum(d[c] + d_hat[c]) for c in problem.served_spaces)
        prog.maximize(s.psi - lam * violation)

        report = prog.solve(opts.conic)
        if not report.ok:
            logger.warning("theta_step_failed", status=report.status.value, diagnostics=report.diagnostics)
            return None, it, np.inf
        penalty_value = float(
            sum(np.sum(np.real(report[f"d:{c.value}"]) + np.real(report[f"d_hat:{c.value}"])) for c in problem.served_spaces)
        )
        candidate = it.with_updates(
            u={c: np.asarray(report[f"u:{c.value}"]).copy() for c in problem.served_spaces},
            psi=max(float(report["psi"]), 0.0),
            varrho=float(report["varrho"]),
            r=np.real(report["r"]),
            alpha=np.real(report["alpha"]),
            eta=np.real(report["eta"]),
            x2_bar=np.real(report["x2"]),
            x3_bar=np.real(report["x3"]),
            multipliers={**it.multipliers, **s.multipliers(report), **self._power_multipliers(report, problem)},
        )
        return report, candidate, penalty_value

    # -------------------------------------------------------------- shared pieces
    @staticmethod
    def _noise_constraint(prog, problem: NormalizedProblem, k: int, u_k, s: _RateSlacks) -> None:
        if u_k is None or problem.s1 == 0:
            prog.add_linear(f"noise:{k}", s.noise[k] == 0)
            return
        build_noise_lmi(
            problem.f[k], u_k, problem.errors[k].f, s.noise[k], s.upsilon_f[k], problem.s1, name=f"noise:{k}"
        ).register(prog)

    def _power_constraints(
        self,
        prog: ConicProgram,
        problem: NormalizedProblem,
        surfaces,
        W,
        varrho,
        surfaces_fixed: bool,
        amplitude_bounds=None,
        it: Optional[BoundedIterate] = None,
    ) -> None:
        """Surface-power and total-power LMIs, or the plain total-power cone when no amplifier draws power"""
        params = problem.params
        if not surfaces or not params.surface_budgeted:
            prog.add_convex("total_power", params.xi * cp.sum_squares(W) + params.static_power <= varrho)
            return
        C = len(surfaces)
        mode = self._options.ris_error_bound
        sigma_ris = prog.add_vector("sigma_ris", C, nonneg=True)
        theta_tot = prog.add_vector("theta_total", C, nonneg=True)
        penalties = [None, None]
        if not surfaces_fixed:
            penalties = [0.0, 0.0]
            xi_G = problem.error_G
            if xi_G > 0:
                mu = prog.add_vector("radius_sq", C, nonneg=True)
                prod_ris = prog.add_vector("radius_ris", C, nonneg=True)
                prod_tot = prog.add_vector("radius_total", C, nonneg=True)
                prev_sigma = it.multipliers.get("sigma_ris", np.zeros(C))
                prev_theta = it.multipliers.get("theta_total", np.zeros(C))
                for i, (space, bound) in enumerate(zip(problem.served_spaces, amplitude_bounds)):
                    if mode == "frobenius_mean":
                        prog.add_linear(f"radius:{space.value}", mu[i] >= xi_G ** 2 * cp.sum(bound) / problem.M)
                    else:
                        prog.add_linear(f"radius:{space.value}", mu[i] >= xi_G ** 2 * bound)
                    mu0 = ris_error_radius_sq(it.u[space], xi_G, mode)
                    prog.add_convex(
                        f"radius_cub_ris:{space.value}",
                        cub(sigma_ris[i], mu[i], _bound_parameter(mu0, float(prev_sigma[i]))) <= prod_ris[i],
                    )
                    prog.add_convex(
                        f"radius_cub_total:{space.value}",
                        cub(theta_tot[i], mu[i], _bound_parameter(mu0, float(prev_theta[i]))) <= prod_tot[i],
                    )
                penalties = [cp.sum(prod_ris), cp.sum(prod_tot)]
        build_ris_power_lmi(
            surfaces, problem.G, W, problem.error_G, [sigma_ris[i] for i in range(C)],
            params.p_ris_max, params.sigma1_sq, radius_penalty=penalties[0], radius_mode=mode,
        ).register(prog)
        build_total_power_lmi(
            surfaces, problem.G, W, problem.error_G, [theta_tot[i] for i in range(C)], varrho,
            params.static_power, params.xi, params.zeta, params.sigma1_sq,
            radius_penalty=penalties[1], radius_mode=mode,
        ).register(prog)

    @staticmethod
    def _power_multipliers(report: SolveReport, problem: NormalizedProblem) -> Dict[str, np.ndarray]:
        if not problem.served_spaces or not problem.params.surface_budgeted:
            return {}
        return {"sigma_ris": np.real(report["sigma_ris"]), "theta_total": np.real(report["theta_total"])}

    # --------------------------------------------------------------------- driver
    def alternate(self, scenario: ScenarioInstance) -> RunResult:
        """Beam and surface steps until the nominal EE settles; every half-step is traced"""
        start = time.perf_counter()
        opts = self._options
        problem = NormalizedProblem.from_scenario(scenario)
        try:
            it = self.init(problem)
        except InfeasibleInitializationError as exc:
            logger.warning("bounded_init_infeasible", seed=scenario.seed, reason=str(exc))
            return RunResult(RunStatus.INFEASIBLE, None, None, None, flags=("init_infeasible",),
                             wall_time=time.perf_counter() - start)

        trace: List[TraceRow] = []
        flags: List[str] = []
        status = RunStatus.MAX_ITER
        previous = None
        iteration = 0
        for iteration in range(1, opts.ao_max + 1):
            before = it
            it, report = self.solve_w(it, problem)
            if not report.ok and not it.certified:
                status = RunStatus.INFEASIBLE if report.status.value == "infeasible" else RunStatus.FAILED
                trace.append(TraceRow(iteration, "w", float("nan"), float("nan"), report.status.value))
                break
            accepted = report.ok and it is not before
            trace.append(TraceRow(iteration, "w", it.psi, self._nominal_ee(scenario, problem, it),
                                  "accepted" if accepted else report.status.value))
            if not report.ok:
                flags.append("w_step_failed")
            if problem.served_spaces:
                outcome = self.solve_theta_pccp(it, problem)
                it = outcome.iterate
                flags.extend(outcome.flags)
                trace.append(
                    TraceRow(iteration, "theta", it.psi, self._nominal_ee(scenario, problem, it),
                             "accepted" if outcome.accepted else "rejected", penalty=outcome.penalty,
                             lam=outcome.lam)
                )
            # stop on the realized nominal EE of the last half-step, not on the bound psi
            current = trace[-1].ee
            if previous is not None and abs(current - previous) <= opts.ao_tol:
                status = RunStatus.CONVERGED
                break
            previous = current

        wall = time.perf_counter() - start
        if not it.certified:
            return RunResult(status, None, None, None, trace, iteration, wall, tuple(flags))
        beams = BeamformerSet(w=it.w)
        ris = problem.profile(it.u) if problem.served_spaces else RisProfile.off(problem.M, problem.params.beta_max)
        report = evaluate(scenario, beams, ris, r_targets=it.r)
        logger.info("bounded_run_finished", seed=scenario.seed, status=status.value, ee=report.ee,
                    iterations=iteration)
        return RunResult(status, beams, ris, report, trace, iteration, wall, tuple(sorted(set(flags))))

    @staticmethod
    def _nominal_ee(scenario: ScenarioInstance, problem: NormalizedProblem, it: BoundedIterate) -> float:
        beams = BeamformerSet(w=it.w)
        ris = problem.profile(it.u) if problem.served_spaces else RisProfile.off(problem.M, problem.params.beta_max)
        return evaluate(scenario, beams, ris).ee
