"""Column orders of every CSV the harness writes.

Files start with a ``# schema: mfris-ee/<kind>/v1`` line; readers check both
the header and the presence of these columns.
"""

from typing import Dict, Tuple

from .iterate import TRACE_COLUMNS
from .solution import REPORT_COLUMNS

SCHEMA_VERSION = "v1"

RUN_COLUMNS: Tuple[str, ...] = (
    "config_hash", "axis", "value", "scheme", "error_model", "seed",
    "status", "iterations", "wall_time", "flags",
) + REPORT_COLUMNS

SUMMARY_COLUMNS: Tuple[str, ...] = (
    "config_hash", "axis", "value", "scheme", "error_model", "runs", "feasible_runs",
    "ee_mean", "ee_std", "sum_rate_mean", "sum_rate_std", "total_power_mean",
)

FEASIBILITY_COLUMNS: Tuple[str, ...] = (
    "config_hash", "M", "N", "delta", "drops", "feasible", "failed", "rate",
)

CONVERGENCE_COLUMNS: Tuple[str, ...] = ("config_hash", "K", "seed", "error_model") + TRACE_COLUMNS

SERIES_COLUMNS: Tuple[str, ...] = ("series", "x", "y", "yerr")

SCHEMAS: Dict[str, Tuple[str, ...]] = {
    "runs": RUN_COLUMNS,
    "summary": SUMMARY_COLUMNS,
    "feasibility": FEASIBILITY_COLUMNS,
    "convergence": CONVERGENCE_COLUMNS,
    "series": SERIES_COLUMNS,
}


def schema_header(kind: str) -> str:
    return f"# schema: mfris-ee/{kind}/{SCHEMA_VERSION}"
