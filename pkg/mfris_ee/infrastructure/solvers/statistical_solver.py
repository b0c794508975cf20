"""Outage-constrained energy-efficiency solver for Gaussian CSI errors.

Each round freezes per-user rate targets and alternates two lifted
subproblems: the beam step minimizes expected power over ``W_k >= 0`` and the
surface step maximizes the smallest outage margin over ``V_c >= 0`` without
spending more power. Both replace the chance constraints by the Bernstein-type
trace, norm and spectral conditions and drive their lifted matrices to rank
one with a sequence of trace-ratio cuts. The extracted point is repaired to
the power budgets and its rates are certified in closed form; targets then
grow while the certified EE keeps improving.
"""

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, List, Optional, Tuple

import cvxpy as cp
import numpy as np

from ...domain.entities.iterate import RunResult, RunStatus, StatisticalIterate, TraceRow
from ...domain.entities.scenario import ScenarioInstance, Space
from ...domain.entities.solution import BeamformerSet, RisProfile
from ...domain.exceptions import InfeasibleInitializationError, RankOneExtractionError
from ...domain.interfaces.solvers import IRobustSolver
from ...logging_config import get_logger
from ..conic.program import ConicOptions, ConicProgram, SolveReport
from ..evaluation.system_model import evaluate, rate_to_sinr, sinr_to_rate
from ..linalg.complex_linalg import ensure_hermitian, max_eigpair, outer
from ..robust.robustify import (
    SurfaceGram,
    bernstein_blocks,
    bernstein_certified_rate,
    bernstein_constraints,
    bernstein_trace,
    expected_ris_power,
    lift_surface,
)
from .problem_data import NormalizedProblem, aligned_surfaces, initial_point, project_amplitudes

logger = get_logger(__name__)

STALL_ZETA = 1e-6
OMEGA_CAP = 0.9999
CERT_TOL = 1e-4
ACCEPT_TOL = 1e-6
MIN_GROWTH = 1e-3
VARRHO_SLACK = 1e-9


@dataclass(frozen=True)
class StatisticalOptions:
    zeta0: float = 0.1
    ratio_target: float = 0.999
    objective_tol: float = 1e-4
    rate_floor: float = 1e-3
    target_growth: float = 0.1
    srocr_max_iter: int = 40
    ao_max: int = 30
    ao_tol: float = 1e-4
    repair_tol: float = 1e-5
    extraction_threshold: float = 0.99
    conic: ConicOptions = field(default_factory=ConicOptions)

    def __post_init__(self):
        if not 0 < self.ratio_target <= 1:
            raise ValueError("ratio_target must lie in (0, 1]")
        if self.zeta0 <= 0 or self.rate_floor <= 0 or self.target_growth <= 0:
            raise ValueError("zeta0, rate_floor and target_growth must be positive")
        if self.extraction_threshold > self.ratio_target:
            raise ValueError("extraction_threshold cannot exceed ratio_target")


@dataclass
class SrocrOutcome:
    iterate: StatisticalIterate
    ok: bool
    status: str
    iterations: int
    flags: Tuple[str, ...] = ()
    margin: Optional[float] = None


@dataclass
class RepairOutcome:
    w: np.ndarray
    certified: np.ndarray
    feasible: bool
    flags: Tuple[str, ...] = ()


@dataclass
class FeasibilityOutcome:
    feasible: bool
    certified: Optional[np.ndarray] = None
    flags: Tuple[str, ...] = ()


def trace_ratio(X: np.ndarray) -> float:
    """lambda_max(X) / Tr(X), zero for a null matrix"""
    trace = float(np.real(np.trace(X)))
    if trace <= 0:
        return 0.0
    value, _ = max_eigpair(X)
    return float(np.clip(value / trace, 0.0, 1.0))


def srocr_update(X: np.ndarray, zeta: float, cap: float = 1.0) -> float:
    """Next trace-ratio cut: min(cap, lambda_max/Tr + zeta)"""
    return min(cap, trace_ratio(X) + zeta)


def extract_rank_one(X: np.ndarray, threshold: float = 0.99, unit_last: bool = False) -> np.ndarray:
    """sqrt(lambda_max) v_max of a nearly rank-one PSD matrix.

    With ``unit_last`` the vector is rescaled so that its last entry is exactly 1,
    which is how a lifted surface matrix stores its anchor.
    """
    X = ensure_hermitian(X)
    ratio = trace_ratio(X)
    if ratio < threshold:
        raise RankOneExtractionError(f"trace ratio {ratio:.4f} is below {threshold}")
    value, vector = max_eigpair(X)
    x = np.sqrt(max(value, 0.0)) * vector
    if unit_last:
        if abs(x[-1]) < 1e-12:
            raise RankOneExtractionError("lifted surface has a vanishing anchor entry")
        x = x / x[-1]
    return x


def _srocr_cut(prog: ConicProgram, handle: str, X, reference: np.ndarray, omega: float) -> None:
    v = max_eigpair(reference)[1]
    prog.add_linear(handle, cp.real(cp.trace(outer(v, v) @ X)) >= omega * cp.real(cp.trace(X)))


class StatisticalSolver(IRobustSolver):
    """Alternating optimization under the Gaussian error model"""

    def __init__(self, options: StatisticalOptions = StatisticalOptions()):
        self._options = options

    @property
    def options(self) -> StatisticalOptions:
        return self._options

    # ----------------------------------------------------------------- helpers
    @staticmethod
    def surface_power(problem: NormalizedProblem, u: Dict[Space, np.ndarray]) -> np.ndarray:
        """Diagonal of sum_c Theta_c Theta_c^H"""
        psi = np.zeros(problem.M)
        for space in problem.served_spaces:
            psi = psi + np.abs(u[space]) ** 2
        return psi

    def expected_power(self, problem: NormalizedProblem, w: np.ndarray, u: Dict[Space, np.ndarray]) -> float:
        params = problem.params
        W_sum = w.T @ np.conj(w)
        ris = 0.0
        if problem.served_spaces and params.surface_budgeted:
            ris = expected_ris_power(self.surface_power(problem, u), problem.G, W_sum, problem.error_G, params.sigma1_sq)
        return float(params.xi * np.real(np.trace(W_sum)) + params.zeta * ris + params.static_power)

    def certified_rates(self, problem: NormalizedProblem, w: np.ndarray, u: Dict[Space, np.ndarray]) -> np.ndarray:
        """Per-user rates that hold with probability at least 1 - rho"""
        params = problem.params
        K = problem.K
        lifted = np.array([outer(w[k], w[k]) for k in range(K)])
        out = np.zeros(K)
        for k in range(K):
            e = problem.errors[k]
            nominal = float(sinr_to_rate(problem.signal(k, w, u) / problem.interference_plus_noise(k, w, u)))
            out[k] = bernstein_certified_rate(
                k, lifted, problem.surface(k, u), problem.h[k], problem.f[k], problem.F[k],
                (e.h, e.f, e.F), problem.s1, 1.0, params.rho, range(K), upper=nominal + 1.0,
            )
        return out

    def certified_ee(self, problem: NormalizedProblem, w: np.ndarray, u: Dict[Space, np.ndarray],
                     certified: np.ndarray) -> float:
        return float(np.sum(certified) / self.expected_power(problem, w, u))

    def _max_scale(self, problem: NormalizedProblem, w: np.ndarray, u: Dict[Space, np.ndarray]) -> float:
        """Largest beam scaling that keeps the transmit and expected surface budgets"""
        params = problem.params
        transmit = float(np.sum(np.abs(w) ** 2))
        limits = [np.sqrt(params.p_bs_max / transmit)] if transmit > 0 else []
        if problem.served_spaces and params.surface_budgeted:
            psi = self.surface_power(problem, u)
            amplified = expected_ris_power(psi, problem.G, w.T @ np.conj(w), problem.error_G, 0.0)
            headroom = params.p_ris_max - params.sigma1_sq * float(np.sum(psi))
            if headroom <= 0:
                return 0.0
            if amplified > 0:
                limits.append(np.sqrt(headroom / amplified))
        return float(min(limits, default=1.0))

    def repair(self, problem: NormalizedProblem, w: np.ndarray, u: Dict[Space, np.ndarray]) -> RepairOutcome:
        """Rescale extracted beams onto the budgets, then certify the rate floor"""
        opts = self._options
        r_min = problem.params.r_min
        flags: List[str] = []
        scale = self._max_scale(problem, w, u)
        if scale <= 0:
            return RepairOutcome(w, np.zeros(problem.K), False, ("surface_noise_exceeds_budget",))
        if scale < 1 - opts.repair_tol:
            logger.info("power_repair", factor=scale)
            w = w * scale
            flags.append("power_repair")
            scale = 1.0
        certified = self.certified_rates(problem, w, u)
        if np.min(certified) >= r_min - CERT_TOL:
            return RepairOutcome(w, certified, True, tuple(flags))
        if scale > 1 + opts.repair_tol:
            boosted = w * scale
            boosted_rates = self.certified_rates(problem, boosted, u)
            if np.min(boosted_rates) >= r_min - CERT_TOL:
                logger.info("rate_repair", factor=scale)
                return RepairOutcome(boosted, boosted_rates, True, tuple(flags + ["rate_repair"]))
        logger.info("rate_floor_missed", min_certified=float(np.min(certified)), r_min=r_min)
        return RepairOutcome(w, certified, False, tuple(flags + ["rate_floor_missed"]))

    def lift(self, problem: NormalizedProblem, w: np.ndarray, u: Dict[Space, np.ndarray],
             targets: np.ndarray, growth: Optional[float] = None) -> StatisticalIterate:
        opts = self._options
        return StatisticalIterate(
            W=np.array([outer(w[k], w[k]) for k in range(problem.K)]),
            V={space: lift_surface(u[space]) for space in problem.served_spaces},
            targets=np.asarray(targets, dtype=float),
            varrho=self.expected_power(problem, w, u),
            ratio_w=np.ones(problem.K),
            ratio_v={space: 1.0 for space in problem.served_spaces},
            zeta=opts.zeta0,
            growth=opts.target_growth if growth is None else growth,
        )

    def extract_beams(self, W: np.ndarray) -> np.ndarray:
        return np.array([extract_rank_one(Wk, self._options.extraction_threshold) for Wk in W])

    def extract_surfaces(self, problem: NormalizedProblem, V: Dict[Space, np.ndarray]) -> Dict[Space, np.ndarray]:
        """Surface coefficients from lifted matrices V = y y^H with y = conj([u; 1])"""
        u = {}
        for space, Vc in V.items():
            y = extract_rank_one(Vc, self._options.extraction_threshold, unit_last=True)
            u[space] = np.conj(y[:-1])
        return project_amplitudes(u, problem.params.beta_max)

    def _gammas(self, targets: np.ndarray) -> np.ndarray:
        return rate_to_sinr(np.maximum(targets, self._options.rate_floor))

    # ------------------------------------------------------------- SROCR driver
    def _srocr(
        self,
        label: str,
        build: Callable[[Dict[Hashable, float], Dict[Hashable, np.ndarray]], Tuple[ConicProgram, Dict[Hashable, str]]],
        reference: Dict[Hashable, np.ndarray],
    ):
        """Tighten trace-ratio cuts until every lifted matrix is nearly rank one"""
        opts = self._options
        omega = {key: 0.0 for key in reference}
        zeta = opts.zeta0
        best: Optional[Tuple[Dict[Hashable, np.ndarray], Dict[Hashable, float], SolveReport]] = None
        deltas: List[float] = []
        flags: List[str] = []
        status = "max-iter"
        iterations = 0
        for iterations in range(1, opts.srocr_max_iter + 1):
            prog, handles = build(omega, reference)
            report = prog.solve(opts.conic)
            if report.ok:
                X = {key: ensure_hermitian(report[handle]) for key, handle in handles.items()}
                ratios = {key: trace_ratio(X[key]) for key in X}
                if best is not None:
                    prev = best[2].optimum
                    deltas.append(abs(report.optimum - prev) / max(1.0, abs(prev)))
                best = (X, ratios, report)
                reference = X
                logger.debug("srocr_iteration", step=label, objective=report.optimum,
                             ratio_min=min(ratios.values(), default=1.0), zeta=zeta)
                if (
                    min(ratios.values(), default=1.0) >= opts.ratio_target
                    and len(deltas) >= 2
                    and max(deltas[-2:]) <= opts.objective_tol
                ):
                    status = "converged"
                    break
                omega = {key: srocr_update(X[key], zeta, OMEGA_CAP) for key in X}
            else:
                if best is None:
                    status = report.status.value
                    break
                zeta /= 2
                if zeta < STALL_ZETA:
                    logger.warning("srocr_stall", step=label, ratio_min=min(best[1].values(), default=1.0))
                    flags.append(f"srocr_stall_{label}")
                    status = "stalled"
                    break
                omega = {key: srocr_update(best[0][key], zeta, OMEGA_CAP) for key in best[0]}
        if status == "max-iter":
            flags.append(f"srocr_cap_{label}")
        return best, status, iterations, zeta, tuple(flags)

    # -------------------------------------------------------------- beam step
    def _w_program(self, problem: NormalizedProblem, u: Dict[Space, np.ndarray], targets: np.ndarray,
                   omega, reference) -> Tuple[ConicProgram, Dict[int, str]]:
        # Rate targets are held fixed here: the beam step minimizes the expected
        # power varrho and the surface step maximizes the outage margin. psi is
        # never maximized with free rate variables; the targets move in the outer
        # ascent loop instead.
        params = problem.params
        K, N = problem.K, problem.N
        prog = ConicProgram("w_srocr")
        Ws = [prog.add_hermitian(f"W:{k}", N, psd=True) for k in range(K)]
        gamma = self._gammas(targets)
        for k in range(K):
            e = problem.errors[k]
            C = Ws[k] / gamma[k] - sum(Ws[j] for j in range(K) if j != k)
            block = bernstein_blocks(
                C, SurfaceGram.from_profile(problem.surface(k, u)), problem.h[k], problem.f[k], problem.F[k],
                e.h, e.f, e.F, problem.s1, 1.0, params.rho,
            )
            x = prog.add_scalar(f"x:{k}", nonneg=True)
            y = prog.add_scalar(f"y:{k}", nonneg=True)
            cons = bernstein_constraints(block, x, y, name=f"outage:{k}")
            prog.add_linear(f"outage_trace:{k}", cons.trace)
            prog.add_convex(f"outage_norm:{k}", cons.norm)
            cons.spectral.register(prog)
            if omega[k] > 0:
                _srocr_cut(prog, f"srocr:{k}", Ws[k], reference[k], omega[k])

        W_sum = sum(Ws)
        transmit = cp.real(cp.trace(W_sum))
        prog.add_linear("bs_power", transmit <= params.p_bs_max)
        ris = 0.0
        if problem.served_spaces and params.surface_budgeted:
            ris = expected_ris_power(self.surface_power(problem, u), problem.G, W_sum, problem.error_G, params.sigma1_sq)
            prog.add_linear("ris_power", ris <= params.p_ris_max)
        varrho = prog.add_scalar("varrho", nonneg=True)
        prog.add_linear("total_power", params.xi * transmit + params.zeta * ris + params.static_power <= varrho)
        prog.minimize(varrho)
        return prog, {k: f"W:{k}" for k in range(K)}

    def solve_W_srocr(self, it: StatisticalIterate, problem: NormalizedProblem) -> SrocrOutcome:
        """Lifted beam step with the surface fixed at the iterate's profile"""
        u = self.extract_surfaces_unchecked(it.V)
        reference = {k: it.W[k] for k in range(problem.K)}
        best, status, iterations, zeta, flags = self._srocr(
            "w", lambda omega, ref: self._w_program(problem, u, it.targets, omega, ref), reference
        )
        if best is None:
            logger.info("w_srocr_failed", status=status, targets=it.targets.tolist())
            return SrocrOutcome(it, False, status, iterations, flags)
        X, ratios, report = best
        updated = it.with_updates(
            W=np.array([X[k] for k in range(problem.K)]),
            varrho=float(report["varrho"]),
            ratio_w=np.array([ratios[k] for k in range(problem.K)]),
            zeta=zeta,
        )
        logger.info("w_step_solved", varrho=updated.varrho, ratio_min=float(np.min(updated.ratio_w)),
                    iterations=iterations, status=status)
        return SrocrOutcome(updated, True, status, iterations, flags)

    @staticmethod
    def extract_surfaces_unchecked(V: Dict[Space, np.ndarray]) -> Dict[Space, np.ndarray]:
        """Surfaces of already rank-one lifted matrices, read from the last column"""
        return {space: np.conj(Vc[:-1, -1] / Vc[-1, -1]) for space, Vc in V.items()}

    # ----------------------------------------------------------- surface step
    def _v_program(self, problem: NormalizedProblem, it: StatisticalIterate, omega, reference):
        params = problem.params
        K, M = problem.K, problem.M
        prog = ConicProgram("v_srocr")
        Vs: Dict[Space, cp.Variable] = {}
        phis = []
        for space in problem.served_spaces:
            tag = space.value
            V = prog.add_hermitian(f"V:{tag}", M + 1, psd=True)
            prog.add_linear(f"anchor:{tag}", cp.real(V[M, M]) == 1)
            phi = cp.real(cp.diag(V))[:M]
            prog.add_linear(f"amp_max:{tag}", phi <= params.beta_max)
            Vs[space] = V
            phis.append(phi)
        prog.add_linear("amp_pair", sum(phis) <= params.beta_max)

        margin = prog.add_scalar("margin")
        gamma = self._gammas(it.targets)
        for k in range(K):
            if not problem.serves_user(k):
                continue
            space = problem.space_of(k)
            e = problem.errors[k]
            C = it.W[k] / gamma[k] - sum((it.W[j] for j in range(K) if j != k), np.zeros_like(it.W[k]))
            args = (problem.h[k], problem.f[k], problem.F[k], e.h, e.f, e.F, problem.s1, 1.0, params.rho)
            anchor = bernstein_blocks(C, SurfaceGram.from_lifted(reference[space]), *args)
            x0 = float(np.sqrt(max(float(anchor.sq_norm), 1e-12)))
            block = bernstein_blocks(C, SurfaceGram.from_lifted(Vs[space]), *args, expansion=reference[space])
            x = prog.add_scalar(f"x:{k}", nonneg=True)
            y = prog.add_scalar(f"y:{k}", nonneg=True)
            cons = bernstein_constraints(block, x, y, x_expansion=x0, name=f"outage:{k}")
            prog.add_linear(f"outage_trace:{k}", bernstein_trace(block, x, y) >= margin)
            prog.add_convex(f"outage_norm:{k}", cons.norm)
            cons.spectral.register(prog)
        for space, V in Vs.items():
            if omega[space] > 0:
                _srocr_cut(prog, f"srocr:{space.value}", V, reference[space], omega[space])

        # passive surfaces draw nothing, so the expected power does not depend on V
        if params.surface_budgeted:
            W_sum = it.W.sum(axis=0)
            ris = expected_ris_power(sum(phis), problem.G, W_sum, problem.error_G, params.sigma1_sq)
            prog.add_linear("ris_power", ris <= params.p_ris_max)
            total = params.xi * float(np.real(np.trace(W_sum))) + params.zeta * ris + params.static_power
            prog.add_linear("total_power", total <= it.varrho * (1 + VARRHO_SLACK))
        prog.maximize(margin)
        return prog, {space: f"V:{space.value}" for space in problem.served_spaces}

    def solve_V_srocr(self, it: StatisticalIterate, problem: NormalizedProblem) -> SrocrOutcome:
        """Lifted surface step with the beams fixed; never spends more expected power"""
        if not problem.served_spaces:
            return SrocrOutcome(it, False, "skipped", 0)
        best, status, iterations, zeta, flags = self._srocr(
            "v", lambda omega, ref: self._v_program(problem, it, omega, ref), dict(it.V)
        )
        if best is None:
            logger.info("v_srocr_failed", status=status)
            return SrocrOutcome(it, False, status, iterations, flags)
        X, ratios, report = best
        updated = it.with_updates(V=dict(X), ratio_v=dict(ratios), zeta=zeta)
        margin = float(report["margin"])
        logger.info("v_step_solved", margin=margin, ratio_min=min(ratios.values()), iterations=iterations)
        return SrocrOutcome(updated, True, status, iterations, flags, margin=margin)

    # --------------------------------------------------------------- driver
    def alternate(self, scenario: ScenarioInstance) -> RunResult:
        """Target-ascent rounds of beam and surface steps; the certified EE never decreases"""
        start = time.perf_counter()
        opts = self._options
        problem = NormalizedProblem.from_scenario(scenario)
        params = problem.params
        K = problem.K
        floor = max(params.r_min, opts.rate_floor)
        try:
            w, u = initial_point(problem, scenario.seed)
        except InfeasibleInitializationError as exc:
            logger.warning("statistical_init_infeasible", seed=scenario.seed, reason=str(exc))
            return RunResult(RunStatus.INFEASIBLE, None, None, None, flags=("init_infeasible",),
                             wall_time=time.perf_counter() - start)

        certified = self.certified_rates(problem, w, u)
        best: Optional[Tuple[np.ndarray, Dict[Space, np.ndarray], np.ndarray]] = None
        ee_prev = -np.inf
        if np.min(certified) >= params.r_min - CERT_TOL:
            best = (w, u, certified)
            ee_prev = self.certified_ee(problem, w, u, certified)
        it = self.lift(problem, w, u, np.maximum(certified, floor))
        growth = opts.target_growth
        trace: List[TraceRow] = []
        flags: List[str] = []
        status = RunStatus.MAX_ITER
        rounds = 0
        for rounds in range(1, opts.ao_max + 1):
            if best is None:
                targets = np.full(K, floor)
            else:
                targets = np.maximum(best[2] * (1 + growth), floor)
            w_out = self.solve_W_srocr(it.with_updates(targets=targets, zeta=opts.zeta0, growth=growth), problem)
            flags.extend(w_out.flags)
            trace.append(TraceRow(
                rounds, "w", w_out.iterate.psi if w_out.ok else float("nan"), float("nan"), w_out.status,
                ratio_w_min=float(np.min(w_out.iterate.ratio_w)) if w_out.ok else None, zeta=w_out.iterate.zeta,
            ))
            candidate: Optional[RepairOutcome] = None
            u_new = u
            ratio_v = None
            if w_out.ok:
                lifted = w_out.iterate
                if problem.served_spaces:
                    v_out = self.solve_V_srocr(lifted, problem)
                    flags.extend(v_out.flags)
                    if v_out.ok:
                        lifted = v_out.iterate
                        ratio_v = min(lifted.ratio_v.values())
                try:
                    w_new = self.extract_beams(lifted.W)
                    u_new = self.extract_surfaces(problem, lifted.V) if problem.served_spaces else {}
                    candidate = self.repair(problem, w_new, u_new)
                    flags.extend(candidate.flags)
                except RankOneExtractionError as exc:
                    logger.warning("rank_one_extraction_failed", round=rounds, reason=str(exc))
                    flags.append("rank_one_extraction_failed")
            ee = float("nan")
            if candidate is not None and candidate.feasible:
                ee = self.certified_ee(problem, candidate.w, u_new, candidate.certified)
            accepted = np.isfinite(ee) and ee >= ee_prev - ACCEPT_TOL
            nominal = float("nan")
            if candidate is not None:
                nominal = evaluate(scenario, BeamformerSet(w=candidate.w), self._profile(problem, u_new)).ee
            trace.append(TraceRow(
                rounds, "v", ee, nominal, "accepted" if accepted else "rejected",
                ratio_v=ratio_v, zeta=w_out.iterate.zeta,
            ))

            if accepted:
                delta = ee - ee_prev
                w, u = candidate.w, u_new
                best = (w, u, candidate.certified)
                ee_prev = ee
                it = self.lift(problem, w, u, np.maximum(candidate.certified, floor), growth)
                logger.info("statistical_round_accepted", round=rounds, ee=ee, growth=growth)
                if np.isfinite(delta) and abs(delta) <= opts.ao_tol:
                    status = RunStatus.CONVERGED
                    break
            else:
                if best is None:
                    status = RunStatus.INFEASIBLE
                    break
                growth /= 2
                logger.info("statistical_round_rejected", round=rounds, growth=growth)
                if growth < MIN_GROWTH:
                    flags.append("target_growth_exhausted")
                    status = RunStatus.CONVERGED
                    break

        wall = time.perf_counter() - start
        if best is None:
            return RunResult(RunStatus.INFEASIBLE, None, None, None, trace, rounds, wall, tuple(sorted(set(flags))))
        w, u, certified = best
        beams = BeamformerSet(w=w, lifted=np.array([outer(w[k], w[k]) for k in range(K)]))
        ris = self._profile(problem, u)
        report = evaluate(scenario, beams, ris, r_targets=certified)
        logger.info("statistical_run_finished", seed=scenario.seed, status=status.value, ee=report.ee, rounds=rounds)
        return RunResult(status, beams, ris, report, trace, rounds, wall, tuple(sorted(set(flags))),
                         certified_rates=certified)

    @staticmethod
    def _profile(problem: NormalizedProblem, u: Dict[Space, np.ndarray]) -> RisProfile:
        if not problem.served_spaces:
            return RisProfile.off(problem.M, problem.params.beta_max)
        return problem.profile(u)

    def check_feasibility(self, scenario: ScenarioInstance) -> FeasibilityOutcome:
        """Whether the outage-constrained problem admits a point meeting the rate floor"""
        opts = self._options
        problem = NormalizedProblem.from_scenario(scenario)
        params = problem.params
        try:
            w, u = initial_point(problem, scenario.seed)
        except InfeasibleInitializationError:
            u = aligned_surfaces(problem)
            w = np.zeros((problem.K, problem.N), dtype=complex)
        floor = max(params.r_min, opts.rate_floor)
        it = self.lift(problem, w, u, np.full(problem.K, floor))
        w_out = self.solve_W_srocr(it, problem)
        if not w_out.ok:
            return FeasibilityOutcome(False, None, ("w_step_" + w_out.status,) + w_out.flags)
        try:
            w_new = self.extract_beams(w_out.iterate.W)
        except RankOneExtractionError:
            return FeasibilityOutcome(False, None, w_out.flags + ("rank_one_extraction_failed",))
        repaired = self.repair(problem, w_new, u)
        feasible = bool(np.min(repaired.certified) >= params.r_min - CERT_TOL)
        logger.debug("feasibility_checked", seed=scenario.seed, feasible=feasible)
        return FeasibilityOutcome(feasible, repaired.certified, w_out.flags + repaired.flags)
