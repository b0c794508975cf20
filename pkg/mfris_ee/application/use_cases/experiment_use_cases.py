"""Experiment harness use cases: sweeps, feasibility rates, convergence traces,
complexity estimates and plot emission.

Points run in worker processes when ``harness.workers > 1``. Every worker builds
its own scenario and solver from the pickled settings, so a row depends only on
(config hash, axis value, scheme, error model, seed) and results are merged in
that key order whatever the completion order.
"""

import asyncio
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..dtos.experiment_dtos import (
    INTEGER_AXES, ComplexityResponse, ConvergenceRequest, ConvergenceResponse, ExperimentConfig,
    FeasibilityRequest, FeasibilityResponse, PlotRequest, PlotResponse, SchemeResponse, SweepResponse,
)
from ...domain.entities.iterate import TRACE_COLUMNS, RunStatus
from ...domain.entities.records import (
    CONVERGENCE_COLUMNS, FEASIBILITY_COLUMNS, RUN_COLUMNS, SERIES_COLUMNS, SUMMARY_COLUMNS,
)
from ...domain.entities.scheme import Scheme
from ...domain.entities.solution import REPORT_COLUMNS
from ...domain.interfaces.results import IPlotRenderer, IResultRepository
from ...infrastructure.channels.scenario_generator import ScenarioFactory
from ...infrastructure.solvers import complexity
from ...infrastructure.solvers.factory import build_solver, statistical_options
from ...infrastructure.solvers.statistical_solver import StatisticalSolver
from ...logging_config import get_logger
from ...simulation_config import SimulationSettings

logger = get_logger(__name__)

ERROR_STATUS = "error"
FEASIBLE_STATUSES = (RunStatus.CONVERGED.value, RunStatus.MAX_ITER.value)


def apply_axis(settings: SimulationSettings, axis: str, value: float) -> SimulationSettings:
    """Settings for one grid point of a sweep axis"""
    if axis == "p_max_dbm":
        return settings.updated("system", p_max_dbm=float(value))
    if axis in ("M", "N"):
        return settings.updated("system", **{axis: int(value)})
    if axis == "K":
        return settings.updated("system", K_r=int(value), K_t=int(value))
    if axis == "ris_x":
        _, y, z = settings.geometry.ris_pos
        return settings.updated("geometry", ris_pos=(float(value), y, z))
    if axis == "delta":
        d2 = float(value) ** 2
        return settings.updated("uncertainty", delta_h_sq=2 * d2, delta_f_sq=d2, delta_G_sq=d2)
    raise ValueError(f"Unknown sweep axis '{axis}'")


def build_scenario(settings: SimulationSettings, scheme: str, error_model: str, seed: int):
    params = settings.to_system_params(scheme)
    factory = ScenarioFactory(params, settings.to_layout(), kappa_db=settings.geometry.rician_db)
    return factory.generate(
        seed,
        error_model=error_model,
        deltas=settings.uncertainty.deltas,
        rho_q=settings.uncertainty.rho_q,
    )


@dataclass(frozen=True)
class SweepJob:
    settings: SimulationSettings
    config_hash: str
    axis: str
    value: float
    scheme: str
    error_model: str
    seed: int

    @property
    def key(self):
        return (self.value, self.scheme, self.error_model, self.seed)


def _run_point(job: SweepJob) -> Dict[str, Any]:
    row: Dict[str, Any] = {
        "config_hash": job.config_hash,
        "axis": job.axis,
        "value": job.value,
        "scheme": job.scheme,
        "error_model": job.error_model,
        "seed": job.seed,
    }
    try:
        settings = apply_axis(job.settings, job.axis, job.value)
        scenario = build_scenario(settings, job.scheme, job.error_model, job.seed)
        result = build_solver(settings, job.error_model).alternate(scenario)
    except Exception as exc:
        logger.error("sweep_point_failed", axis=job.axis, value=job.value, scheme=job.scheme,
                     error_model=job.error_model, seed=job.seed, error=str(exc))
        row.update(status=ERROR_STATUS, iterations=0, wall_time=0.0, flags=type(exc).__name__)
        row.update({column: np.nan for column in REPORT_COLUMNS})
        return row
    row.update(
        status=result.status.value,
        iterations=result.iterations,
        wall_time=result.wall_time,
        flags=";".join(result.flags),
    )
    if result.report is not None:
        report = result.report.to_row()
        row.update({column: report[column] for column in REPORT_COLUMNS})
    else:
        row.update({column: np.nan for column in REPORT_COLUMNS})
    logger.info("sweep_point_finished", axis=job.axis, value=job.value, scheme=job.scheme,
                error_model=job.error_model, seed=job.seed, status=row["status"], ee=row["ee"])
    return row


@dataclass(frozen=True)
class FeasibilityJob:
    settings: SimulationSettings
    M: int
    N: int
    delta: float
    seed: int


def _feasibility_point(job: FeasibilityJob) -> Optional[bool]:
    """Whether the drop admits a certified point; None when the check itself failed"""
    try:
        settings = apply_axis(job.settings.updated("system", M=job.M, N=job.N), "delta", job.delta)
        scenario = build_scenario(settings, Scheme.MF_RIS.value, "statistical", job.seed)
        return bool(StatisticalSolver(statistical_options(settings)).check_feasibility(scenario).feasible)
    except Exception as exc:
        logger.error("feasibility_point_failed", M=job.M, N=job.N, delta=job.delta, seed=job.seed,
                     error=str(exc), error_type=type(exc).__name__)
        return None


async def run_jobs(jobs: Sequence[Any], worker: Callable[[Any], Any], workers: int) -> List[Any]:
    """Results in job order; a process pool when more than one worker is configured"""
    loop = asyncio.get_running_loop()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(await asyncio.gather(*(loop.run_in_executor(pool, worker, job) for job in jobs)))
    return [await loop.run_in_executor(None, worker, job) for job in jobs]


def _records(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    # NaN becomes null and numpy scalars become plain JSON numbers
    return json.loads(frame.to_json(orient="records"))


def summarize(runs: pd.DataFrame) -> pd.DataFrame:
    """Mean and spread per (axis, value, scheme, error model) over the feasible runs"""
    if runs.empty:
        return pd.DataFrame(columns=list(SUMMARY_COLUMNS))
    rows = []
    keys = ["config_hash", "axis", "value", "scheme", "error_model"]
    for key, group in runs.groupby(keys, sort=True):
        ok = group[group["status"].isin(FEASIBLE_STATUSES)]
        row = dict(zip(keys, key))
        row.update(
            runs=len(group),
            feasible_runs=len(ok),
            ee_mean=ok["ee"].mean(),
            ee_std=ok["ee"].std(ddof=0),
            sum_rate_mean=ok["sum_rate"].mean(),
            sum_rate_std=ok["sum_rate"].std(ddof=0),
            total_power_mean=ok["total_power"].mean(),
        )
        rows.append(row)
    return pd.DataFrame(rows, columns=list(SUMMARY_COLUMNS))


class RunSweepUseCase:
    def __init__(self, settings: SimulationSettings, result_repository: IResultRepository):
        self._settings = settings
        self._result_repository = result_repository

    def jobs(self, config: ExperimentConfig) -> List[SweepJob]:
        harness = self._settings.harness
        seeds = config.seeds or harness.seeds
        seed_base = harness.seed_base if config.seed_base is None else config.seed_base
        config_hash = self._settings.config_hash()
        values = [int(v) if config.axis in INTEGER_AXES else float(v) for v in config.values]
        return [
            SweepJob(self._settings, config_hash, config.axis, value, scheme, error_model, seed_base + i)
            for value in values
            for scheme in config.schemes
            for error_model in config.error_models
            for i in range(seeds)
        ]

    async def execute(self, config: ExperimentConfig) -> SweepResponse:
        """Run every (grid point, scheme, error model, seed) and persist rows plus per-point summary"""
        jobs = self.jobs(config)
        logger.info("sweep_started", axis=config.axis, points=len(config.values), jobs=len(jobs))
        rows = await run_jobs(jobs, _run_point, self._settings.harness.workers)
        order = sorted(range(len(jobs)), key=lambda i: jobs[i].key)
        runs = pd.DataFrame([rows[i] for i in order], columns=list(RUN_COLUMNS))
        summary = summarize(runs)

        runs_path = await self._result_repository.save_frame(runs, "runs", config.file_stem)
        summary_path = await self._result_repository.save_frame(summary, "summary", f"{config.file_stem}_summary")
        failed = int((runs["status"] == ERROR_STATUS).sum())
        logger.info("sweep_finished", axis=config.axis, rows=len(runs), failed_points=failed)
        return SweepResponse(
            config_hash=self._settings.config_hash(),
            runs_path=str(runs_path),
            summary_path=str(summary_path),
            rows=len(runs),
            failed_points=failed,
            summary=_records(summary),
        )


class FeasibilityRateUseCase:
    def __init__(self, settings: SimulationSettings, result_repository: IResultRepository):
        self._settings = settings
        self._result_repository = result_repository

    async def execute(self, request: FeasibilityRequest) -> FeasibilityResponse:
        """Fraction of statistical-model drops with a certified feasible point, per (M, N, delta) cell"""
        seed_base = self._settings.harness.seed_base if request.seed_base is None else request.seed_base
        cells = [(M, N, d) for M in request.M_values for N in request.N_values for d in request.delta_values]
        jobs = [
            FeasibilityJob(self._settings, M, N, d, seed_base + i)
            for M, N, d in cells
            for i in range(request.drops)
        ]
        logger.info("feasibility_started", cells=len(cells), drops=request.drops)
        outcomes = await run_jobs(jobs, _feasibility_point, self._settings.harness.workers)

        config_hash = self._settings.config_hash()
        rows = []
        for c, (M, N, d) in enumerate(cells):
            cell = outcomes[c * request.drops:(c + 1) * request.drops]
            hits = sum(1 for outcome in cell if outcome is True)
            failed = sum(1 for outcome in cell if outcome is None)
            checked = request.drops - failed
            rows.append({
                "config_hash": config_hash, "M": M, "N": N, "delta": d,
                "drops": request.drops, "feasible": hits, "failed": failed,
                # failed checks say nothing about feasibility and stay out of the rate
                "rate": hits / checked if checked else np.nan,
            })
        table = pd.DataFrame(rows, columns=list(FEASIBILITY_COLUMNS)).sort_values(["M", "N", "delta"])
        path = await self._result_repository.save_frame(table, "feasibility", request.name or "feasibility")
        failed_points = int(table["failed"].sum())
        logger.info("feasibility_finished", cells=len(cells), failed_points=failed_points)
        return FeasibilityResponse(
            config_hash=config_hash, path=str(path), failed_points=failed_points, table=_records(table),
        )


class RunConvergenceUseCase:
    def __init__(self, settings: SimulationSettings, result_repository: IResultRepository):
        self._settings = settings
        self._result_repository = result_repository

    async def execute(self, request: ConvergenceRequest) -> ConvergenceResponse:
        """Per-iteration traces of both solvers with K_r = K_t = K"""
        seed = self._settings.harness.seed_base if request.seed is None else request.seed
        jobs = [
            SweepJob(self._settings, self._settings.config_hash(), "K", K, Scheme.MF_RIS.value, model, seed)
            for K in request.K_values
            for model in request.error_models
        ]
        traces = await run_jobs(jobs, _trace_point, self._settings.harness.workers)
        frame = pd.DataFrame(
            [row for rows in traces for row in rows], columns=list(CONVERGENCE_COLUMNS)
        )
        path = await self._result_repository.save_frame(frame, "convergence", request.name or "convergence")
        failed = int((frame["status"] == ERROR_STATUS).sum())
        logger.info("convergence_finished", runs=len(jobs), rows=len(frame), failed_points=failed)
        return ConvergenceResponse(
            config_hash=self._settings.config_hash(), path=str(path), rows=len(frame), failed_points=failed,
        )


def _trace_point(job: SweepJob) -> List[Dict[str, Any]]:
    """Trace rows of one run; a failed run leaves a single error row"""
    head = {"config_hash": job.config_hash, "K": int(job.value), "seed": job.seed, "error_model": job.error_model}
    try:
        settings = apply_axis(job.settings, "K", job.value)
        scenario = build_scenario(settings, job.scheme, job.error_model, job.seed)
        result = build_solver(settings, job.error_model).alternate(scenario)
    except Exception as exc:
        logger.error("convergence_point_failed", K=job.value, error_model=job.error_model, seed=job.seed,
                     error=str(exc), error_type=type(exc).__name__)
        row = {column: np.nan for column in TRACE_COLUMNS}
        row.update(iteration=0, half_step="", status=ERROR_STATUS)
        return [{**head, **row}]
    return [{**head, **row.to_row()} for row in result.trace]


class ComplexityEstimateUseCase:
    async def execute(self, N: int, M: int, K: int) -> ComplexityResponse:
        """Worst-case operation counts of the four convex subproblems"""
        est = complexity.estimate(N, M, K)
        return ComplexityResponse(
            N=N, M=M, K=K,
            bounded_w=est.bounded_w,
            bounded_theta=est.bounded_theta,
            statistical_w=est.statistical_w,
            statistical_v=est.statistical_v,
            block_sizes=asdict(est.sizes),
        )


class ListSchemesUseCase:
    async def execute(self) -> List[SchemeResponse]:
        return [SchemeResponse(tag=s.value, **s.overrides.describe()) for s in Scheme]


class EmitPlotsUseCase:
    def __init__(self, result_repository: IResultRepository, plot_renderer: IPlotRenderer):
        self._result_repository = result_repository
        self._plot_renderer = plot_renderer

    async def execute(self, request: PlotRequest) -> PlotResponse:
        """One figure per sweep axis with the plotted numbers written alongside"""
        frame = await self._result_repository.load_frame(request.csv_path, request.kind)
        figures = self._series(frame, request)
        images, series = [], []
        for name, (data, xlabel, ylabel) in figures.items():
            series_path = await self._result_repository.save_frame(data, "series", f"{name}_series")
            image = self._plot_renderer.render(data, name, xlabel, ylabel)
            logger.info("plot_emitted", name=name, image=str(image), series=len(data["series"].unique()))
            images.append(str(image))
            series.append(str(series_path))
        return PlotResponse(images=images, series=series)

    @staticmethod
    def _series(frame: pd.DataFrame, request: PlotRequest) -> Dict[str, tuple]:
        empty = pd.DataFrame(columns=list(SERIES_COLUMNS))
        stem = request.csv_path.replace("\\", "/").rsplit("/", 1)[-1].rsplit(".", 1)[0]
        if request.kind == "feasibility":
            frame = frame[frame["rate"].notna()]
            if frame.empty:
                return {stem: (empty, "delta", "feasibility rate")}
            data = pd.DataFrame({
                "series": [f"M={m}, N={n}" for m, n in zip(frame["M"], frame["N"])],
                "x": frame["delta"].astype(float),
                "y": frame["rate"].astype(float),
                "yerr": 0.0,
            })
            return {stem: (data.sort_values(["series", "x"]).reset_index(drop=True), "delta", "feasibility rate")}
        if request.kind == "convergence":
            if frame.empty:
                return {stem: (empty, "iteration", "EE (bit/Hz/J)")}
            kept = frame[frame["status"] == "accepted"]
            data = pd.DataFrame({
                "series": [f"K={k} ({m})" for k, m in zip(kept["K"], kept["error_model"])],
                "x": kept["iteration"].astype(float),
                "y": kept["ee"].astype(float),
                "yerr": 0.0,
            })
            return {stem: (data.sort_values(["series", "x"]).reset_index(drop=True), "iteration", "EE (bit/Hz/J)")}

        metric = request.metric
        if f"{metric}_mean" not in SUMMARY_COLUMNS:
            raise ValueError(f"Unknown summary metric '{metric}'")
        std = f"{metric}_std"
        if frame.empty:
            return {stem: (empty, "value", metric)}
        out = {}
        for axis, group in frame.groupby("axis", sort=True):
            data = pd.DataFrame({
                "series": [f"{s} ({m})" for s, m in zip(group["scheme"], group["error_model"])],
                "x": group["value"].astype(float),
                "y": group[f"{metric}_mean"].astype(float),
                "yerr": group[std].astype(float).fillna(0.0) if std in group else 0.0,
            })
            out[f"{metric}_vs_{axis}"] = (data.sort_values(["series", "x"]).reset_index(drop=True), axis, metric)
        return out
