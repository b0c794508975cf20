"""Command-line experiment driver.

    python -m mfris_ee.cli sweep --axis p_max_dbm --values 20 25 30 --schemes MF-RIS NO-RIS
    python -m mfris_ee.cli feasibility --M 4 8 --N 2 4 --delta 0 0.1 0.2 --drops 50
    python -m mfris_ee.cli complexity --N 6 --M 32 --K 6
    python -m mfris_ee.cli plot --csv results/sweep_p_max_dbm_summary.csv
    python -m mfris_ee.cli convergence --K 1 2 3

Exit code is 0 unless a point hard-failed (status ``error``) or the
request itself was invalid.
"""

import argparse
import asyncio
import json
import sys
from typing import Any, Dict, List, Optional

from .application.dtos.experiment_dtos import (
    SWEEP_AXES, ConvergenceRequest, ExperimentConfig, FeasibilityRequest, PlotRequest,
)
from .infrastructure.di_container import container
from .infrastructure.solvers.factory import ERROR_MODELS
from .logging_config import configure_logging, get_logger
from .simulation_config import PROFILES, load_settings

EXIT_OK = 0
EXIT_POINT_FAILED = 1
EXIT_USAGE = 2


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="TOML settings file")
    common.add_argument("--profile", choices=PROFILES, default="desk")
    common.add_argument("--output-dir", default=None)
    common.add_argument("--seed-base", type=int, default=None)
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("--log-level", default=None)
    common.add_argument("--log-json", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="mfris-ee", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", parents=[common], help="EE versus one parameter")
    sweep.add_argument("--axis", choices=SWEEP_AXES, required=True)
    sweep.add_argument("--values", type=float, nargs="+", required=True)
    sweep.add_argument("--schemes", nargs="+", default=["MF-RIS"])
    sweep.add_argument("--error-models", nargs="+", choices=ERROR_MODELS, default=["statistical"])
    sweep.add_argument("--seeds", type=int, default=None)
    sweep.add_argument("--name", default=None)

    feas = sub.add_parser("feasibility", parents=[common], help="feasibility rate over an (M, N, delta) grid")
    feas.add_argument("--M", type=int, nargs="+", default=[8])
    feas.add_argument("--N", type=int, nargs="+", default=[4])
    feas.add_argument("--delta", type=float, nargs="+", default=[0.0, 0.1])
    feas.add_argument("--drops", type=int, default=50)
    feas.add_argument("--name", default=None)

    comp = sub.add_parser("complexity", parents=[common], help="interior-point operation counts")
    comp.add_argument("--N", type=int, required=True)
    comp.add_argument("--M", type=int, required=True)
    comp.add_argument("--K", type=int, required=True)

    plot = sub.add_parser("plot", parents=[common], help="figures from a summary, feasibility or convergence CSV")
    plot.add_argument("--csv", required=True)
    plot.add_argument("--kind", choices=("summary", "feasibility", "convergence"), default="summary")
    plot.add_argument("--metric", default="ee")

    conv = sub.add_parser("convergence", parents=[common], help="per-iteration traces with K_r = K_t = K")
    conv.add_argument("--K", type=int, nargs="+", default=[1, 2])
    conv.add_argument("--error-models", nargs="+", choices=ERROR_MODELS, default=["bounded", "statistical"])
    conv.add_argument("--seed", type=int, default=None)
    conv.add_argument("--name", default=None)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Dict[str, Any]]:
    harness = {}
    if args.output_dir is not None:
        harness["output_dir"] = args.output_dir
    if args.seed_base is not None:
        harness["seed_base"] = args.seed_base
    if args.workers is not None:
        harness["workers"] = args.workers
    return {"harness": harness} if harness else {}


async def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "sweep":
        config = ExperimentConfig(
            axis=args.axis, values=args.values, schemes=args.schemes,
            error_models=args.error_models, seeds=args.seeds, name=args.name,
        )
        response = await container.get_factory('run_sweep_use_case')().execute(config)
        _emit(response.model_dump(exclude={"summary"}))
        return EXIT_POINT_FAILED if response.failed_points else EXIT_OK

    if args.command == "feasibility":
        request = FeasibilityRequest(
            M_values=args.M, N_values=args.N, delta_values=args.delta, drops=args.drops, name=args.name,
        )
        response = await container.get_factory('feasibility_rate_use_case')().execute(request)
        _emit(response.model_dump())
        return EXIT_POINT_FAILED if response.failed_points else EXIT_OK

    if args.command == "complexity":
        response = await container.get_singleton('complexity_estimate_use_case').execute(args.N, args.M, args.K)
        _emit(response.model_dump())
        return EXIT_OK

    if args.command == "plot":
        request = PlotRequest(csv_path=args.csv, kind=args.kind, metric=args.metric)
        response = await container.get_factory('emit_plots_use_case')().execute(request)
        _emit(response.model_dump())
        return EXIT_OK

    request = ConvergenceRequest(K_values=args.K, error_models=args.error_models, seed=args.seed, name=args.name)
    response = await container.get_factory('run_convergence_use_case')().execute(request)
    _emit(response.model_dump())
    return EXIT_POINT_FAILED if response.failed_points else EXIT_OK


def _emit(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2, default=str))


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(level=args.log_level, json=args.log_json or None)
    logger = get_logger(__name__)
    try:
        settings = load_settings(args.config, profile=args.profile, overrides=_overrides(args))
        container.configure(settings)
        return asyncio.run(_dispatch(args))
    except ValueError as exc:
        logger.error("cli_request_invalid", command=args.command, error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
