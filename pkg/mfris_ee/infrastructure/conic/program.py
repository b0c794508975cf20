"""Conic program container on top of cvxpy.

Constraints are registered under string handles and tagged with their cone
(linear, soc, exp, lmi) so that solutions can be re-checked by walking the
list. The default backend is Clarabel, a primal-dual interior-point method
with Nesterov-Todd scaling for the symmetric cones and a native exponential
cone; SCS is tried when Clarabel reports a numerical failure.
"""

import time
import uuid
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import cvxpy as cp
import numpy as np

from ...domain.exceptions import DimensionMismatchError, DuplicateHandleError, UnknownHandleError
from ...logging_config import get_logger

logger = get_logger(__name__)

DUMP_VERSION = "mfris-ee-conic/1"


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITER = "max-iter"
    NUMERICAL_FAILURE = "numerical-failure"


class ConeKind(str, Enum):
    LINEAR = "linear"
    SOC = "soc"
    EXP = "exp"
    LMI = "lmi"


@dataclass(frozen=True)
class ConicOptions:
    backend: str = "CLARABEL"
    fallbacks: Tuple[str, ...] = ("SCS",)
    max_iter: int = 200
    feas_tol: float = 1e-8
    verify_tol: float = 1e-7
    real_embedding: bool = False
    dump_dir: Optional[str] = None


@dataclass
class SolveReport:
    status: SolveStatus
    optimum: Optional[float]
    assignments: Dict[str, np.ndarray]
    iterations: int
    wall_time: float
    backend: str
    residuals: Dict[str, float] = field(default_factory=dict)
    diagnostics: str = ""

    @property
    def ok(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def __getitem__(self, handle: str) -> np.ndarray:
        return self.assignments[handle]


@dataclass
class _Record:
    handle: str
    kind: ConeKind
    constraints: List[cp.Constraint]
    residual: Callable[[], float]
    matrix: Optional[cp.Expression] = None


_STATUS = {
    cp.OPTIMAL: SolveStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: SolveStatus.OPTIMAL,
    cp.INFEASIBLE: SolveStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SolveStatus.INFEASIBLE,
    cp.USER_LIMIT: SolveStatus.MAX_ITER,
}


class ConicProgram:
    """Declarative conic problem with a linear objective"""

    def __init__(self, name: str = "program"):
        self.name = name
        self._variables: Dict[str, cp.Variable] = {}
        self._records: List[_Record] = []
        self._handles = set()
        self._objective: Optional[cp.Expression] = None
        self._sense = "maximize"

    # ------------------------------------------------------------------ variables
    def add_scalar(self, handle: str, nonneg: bool = False) -> cp.Variable:
        return self._declare(handle, cp.Variable(name=handle, nonneg=nonneg))

    def add_vector(self, handle: str, n: int, complex: bool = False, nonneg: bool = False) -> cp.Variable:
        if n < 1:
            raise DimensionMismatchError(f"vector '{handle}' needs a positive length")
        return self._declare(handle, cp.Variable(n, name=handle, complex=complex, nonneg=nonneg))

    def add_matrix(self, handle: str, rows: int, cols: int, complex: bool = False) -> cp.Variable:
        if rows < 1 or cols < 1:
            raise DimensionMismatchError(f"matrix '{handle}' needs positive dimensions")
        return self._declare(handle, cp.Variable((rows, cols), name=handle, complex=complex))

    def add_hermitian(self, handle: str, n: int, psd: bool = False) -> cp.Variable:
        """n x n Hermitian variable; with ``psd`` an LMI ``X >= 0`` is registered too"""
        if n < 1:
            raise DimensionMismatchError(f"matrix '{handle}' needs a positive size")
        var = self._declare(handle, cp.Variable((n, n), name=handle, hermitian=True))
        if psd:
            self.add_lmi(f"{handle}:psd", var)
        return var

    def var(self, handle: str) -> cp.Variable:
        if handle not in self._variables:
            raise UnknownHandleError(f"variable '{handle}' was never declared")
        return self._variables[handle]

    @property
    def variables(self) -> Dict[str, cp.Variable]:
        return dict(self._variables)

    # ---------------------------------------------------------------- constraints
    def add_linear(self, handle: str, constraint: cp.Constraint) -> str:
        """Affine (in)equality built with ==, <= or >="""
        if not isinstance(constraint, (cp.constraints.Zero, cp.constraints.NonPos, cp.constraints.Inequality, cp.constraints.Equality)):
            raise TypeError("linear constraints must be cvxpy (in)equalities")
        return self._register(handle, ConeKind.LINEAR, [constraint], lambda: _violation(constraint))

    def add_convex(self, handle: str, constraint: cp.Constraint) -> str:
        """Any DCP inequality whose atoms reduce to second-order cones"""
        return self._register(handle, ConeKind.SOC, [constraint], lambda: _violation(constraint))

    def add_soc(self, handle: str, t: cp.Expression, x: cp.Expression) -> str:
        """||x||_2 <= t"""
        constraint = cp.norm(cp.vec(x), 2) <= t
        residual = lambda: float(max(np.linalg.norm(np.ravel(x.value)) - float(np.real(t.value)), 0.0))
        return self._register(handle, ConeKind.SOC, [constraint], residual)

    def add_exp(self, handle: str, x: cp.Expression, y: cp.Expression) -> str:
        """x >= exp(y)"""
        constraint = cp.exp(y) <= x
        residual = lambda: float(max(np.exp(float(y.value)) - float(x.value), 0.0) / (1 + abs(float(x.value))))
        return self._register(handle, ConeKind.EXP, [constraint], residual)

    def add_lmi(self, handle: str, matrix: cp.Expression) -> str:
        """Hermitian-affine matrix expression required PSD"""
        if len(matrix.shape) != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError(f"LMI '{handle}' must be square, got {matrix.shape}")
        sym = (matrix + cp.conj(matrix).T) / 2
        constraint = sym >> 0
        return self._register(handle, ConeKind.LMI, [constraint], lambda: _lmi_residual(matrix), matrix)

    def maximize(self, objective: cp.Expression) -> None:
        self._objective, self._sense = objective, "maximize"

    def minimize(self, objective: cp.Expression) -> None:
        self._objective, self._sense = objective, "minimize"

    def feasibility(self) -> None:
        self._objective, self._sense = cp.Constant(0.0), "minimize"

    @property
    def constraint_kinds(self) -> Dict[str, ConeKind]:
        return {r.handle: r.kind for r in self._records}

    def has_constraint(self, prefix: str) -> bool:
        return any(r.handle.startswith(prefix) for r in self._records)

    # --------------------------------------------------------------------- solve
    def to_problem(self) -> cp.Problem:
        if self._objective is None:
            raise ValueError(f"program '{self.name}' has no objective")
        objective = cp.Maximize(self._objective) if self._sense == "maximize" else cp.Minimize(self._objective)
        return cp.Problem(objective, [c for r in self._records for c in r.constraints])

    def solve(self, options: ConicOptions = ConicOptions()) -> SolveReport:
        """Solve with the configured backend; failures come back as statuses"""
        if options.real_embedding and not self.is_real:
            return self.embed().solve(replace(options, real_embedding=False))
        problem = self.to_problem()
        report = None
        for backend in (options.backend, *options.fallbacks):
            report = self._solve_with(problem, backend, options)
            if report.status is not SolveStatus.NUMERICAL_FAILURE:
                break
            logger.warning("conic_backend_failed", program=self.name, backend=backend, diagnostics=report.diagnostics)
        if report.status is SolveStatus.NUMERICAL_FAILURE and options.dump_dir:
            self._dump_failure(Path(options.dump_dir))
        return report

    def _dump_failure(self, directory: Path) -> Optional[Path]:
        path = directory / f"{self.name.replace(':', '_')}-{uuid.uuid4().hex[:12]}.txt"
        try:
            directory.mkdir(parents=True, exist_ok=True)
            path.write_text(self.dump())
        except (OSError, cp.SolverError, ValueError) as exc:
            logger.warning("conic_dump_failed", program=self.name, path=str(path), error=str(exc))
            return None
        logger.info("conic_dump_written", program=self.name, path=str(path))
        return path

    def verify(self) -> Dict[str, float]:
        """Per-constraint scaled violation at the current variable values"""
        return {r.handle: r.residual() for r in self._records}

    def _solve_with(self, problem: cp.Problem, backend: str, options: ConicOptions) -> SolveReport:
        start = time.perf_counter()
        try:
            problem.solve(solver=backend, **_backend_kwargs(backend, options))
        except (cp.SolverError, ArithmeticError, ValueError) as exc:
            return SolveReport(
                status=SolveStatus.NUMERICAL_FAILURE,
                optimum=None,
                assignments={},
                iterations=0,
                wall_time=time.perf_counter() - start,
                backend=backend,
                diagnostics=str(exc),
            )
        elapsed = time.perf_counter() - start
        status = _STATUS.get(problem.status, SolveStatus.NUMERICAL_FAILURE)
        stats = problem.solver_stats
        iterations = int(stats.num_iters) if stats is not None and stats.num_iters is not None else 0
        report = SolveReport(
            status=status,
            optimum=None,
            assignments={},
            iterations=iterations,
            wall_time=elapsed,
            backend=backend,
            diagnostics=str(problem.status),
        )
        if status is SolveStatus.OPTIMAL:
            in_problem = {v.id for v in problem.variables()}
            if any(v.value is None for v in self._variables.values() if v.id in in_problem):
                report.status = SolveStatus.NUMERICAL_FAILURE
                report.diagnostics = "solver returned no primal point"
                return report
            report.residuals = self.verify()
            if problem.status == cp.OPTIMAL_INACCURATE and report.max_residual > 1e3 * options.verify_tol:
                report.status = SolveStatus.NUMERICAL_FAILURE
                report.diagnostics = f"inaccurate solution, residual {report.max_residual:.2e}"
                return report
            if report.max_residual > options.verify_tol:
                logger.debug("conic_residual_above_tolerance", program=self.name, residual=report.max_residual)
            report.optimum = float(problem.value)
            # declared but unconstrained variables come back empty from cvxpy
            report.assignments = {
                h: np.zeros(v.shape, dtype=complex if v.is_complex() else float) if v.value is None
                else np.array(v.value, copy=True)
                for h, v in self._variables.items()
            }
        return report

    # ---------------------------------------------------------------- embedding
    def embed(self) -> "ConicProgram":
        """Equivalent program whose complex LMIs use the real 2n x 2n embedding"""
        out = ConicProgram(f"{self.name}:real")
        out._variables = dict(self._variables)
        out._handles = set(self._handles)
        out._objective, out._sense = self._objective, self._sense
        for record in self._records:
            if record.kind is ConeKind.LMI and record.matrix.is_complex():
                m = record.matrix
                sym = (m + cp.conj(m).T) / 2
                re, im = cp.real(sym), cp.imag(sym)
                real_block = cp.bmat([[re, -im], [im, re]])
                real_sym = (real_block + real_block.T) / 2
                out._records.append(
                    _Record(record.handle, ConeKind.LMI, [real_sym >> 0], record.residual, real_sym)
                )
            else:
                out._records.append(record)
        return out

    @property
    def is_real(self) -> bool:
        return not any(r.kind is ConeKind.LMI and r.matrix.is_complex() for r in self._records)

    # --------------------------------------------------------------------- dump
    def dump(self, backend: str = "CLARABEL") -> str:
        """Versioned text form: declarations followed by the canonical cone data.

        The cone data always comes from the real embedding, so the file can be
        read by solvers without complex PSD support.
        """
        problem = (self if self.is_real else self.embed()).to_problem()
        data, _, _ = problem.get_problem_data(backend)
        lines = [f"# {DUMP_VERSION}", f"name {self.name}", f"sense {self._sense}"]
        for handle, var in self._variables.items():
            kind = "hermitian" if var.is_hermitian() and var.ndim == 2 else ("complex" if var.is_complex() else "real")
            lines.append(f"var {handle} {kind} {'x'.join(str(s) for s in var.shape) or '1'}")
        for record in self._records:
            lines.append(f"con {record.handle} {record.kind.value}")
        dims = data["dims"]
        lines.append(
            f"cones zero={dims.zero} nonneg={dims.nonneg} soc={list(dims.soc)} psd={list(dims.psd)} exp={dims.exp}"
        )
        c = np.asarray(data["c"]).ravel()
        lines.append("c " + " ".join(f"{x:.17g}" for x in c))
        b = np.asarray(data["b"]).ravel()
        lines.append("b " + " ".join(f"{x:.17g}" for x in b))
        A = data["A"].tocoo()
        lines.append(f"A {A.shape[0]} {A.shape[1]} {A.nnz}")
        for i, j, v in sorted(zip(A.row.tolist(), A.col.tolist(), A.data.tolist())):
            lines.append(f"{i} {j} {v:.17g}")
        return "\n".join(lines) + "\n"

    # ------------------------------------------------------------------ helpers
    def _declare(self, handle: str, var: cp.Variable) -> cp.Variable:
        self._claim(handle)
        self._variables[handle] = var
        return var

    def _register(self, handle, kind, constraints, residual, matrix=None) -> str:
        self._claim(handle)
        self._records.append(_Record(handle, kind, constraints, residual, matrix))
        return handle

    def _claim(self, handle: str) -> None:
        if handle in self._handles:
            raise DuplicateHandleError(f"handle '{handle}' already declared in '{self.name}'")
        self._handles.add(handle)


def _backend_kwargs(backend: str, options: ConicOptions) -> dict:
    if backend == "CLARABEL":
        return {
            "max_iter": options.max_iter,
            "tol_feas": options.feas_tol,
            "tol_gap_abs": options.feas_tol,
            "tol_gap_rel": options.feas_tol,
        }
    if backend == "SCS":
        return {"max_iters": 50 * options.max_iter, "eps_abs": 1e-9, "eps_rel": 1e-9}
    return {}


def _violation(constraint: cp.Constraint) -> float:
    value = constraint.violation()
    return float(np.max(value)) if np.size(value) else 0.0


def _lmi_residual(matrix: cp.Expression) -> float:
    value = np.asarray(matrix.value)
    sym = (value + np.conj(value).T) / 2
    worst = -float(np.linalg.eigvalsh(sym)[0])
    return max(worst, 0.0) / (1.0 + float(np.max(np.abs(sym))))


def lmi_min_eigenvalue(matrix: cp.Expression) -> float:
    value = np.asarray(matrix.value)
    return float(np.linalg.eigvalsh((value + np.conj(value).T) / 2)[0])
