from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from ...domain.interfaces.results import IPlotRenderer  # noqa: E402
from ...logging_config import get_logger  # noqa: E402

logger = get_logger(__name__)

MARKERS = ("o", "s", "^", "v", "D", "x", "*", "+")


class MatplotlibPlotRenderer(IPlotRenderer):
    """Error-bar line plots, one line per series, written as PNG"""

    def __init__(self, base_path: Union[str, Path] = "results", dpi: int = 120):
        self._base_path = Path(base_path)
        self._base_path.mkdir(parents=True, exist_ok=True)
        self._dpi = dpi

    def render(self, series: pd.DataFrame, name: str, xlabel: str, ylabel: str) -> Path:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        try:
            for i, (label, group) in enumerate(series.groupby("series", sort=True)):
                group = group.sort_values("x")
                ax.errorbar(
                    group["x"].to_numpy(dtype=float),
                    group["y"].to_numpy(dtype=float),
                    yerr=group["yerr"].to_numpy(dtype=float),
                    marker=MARKERS[i % len(MARKERS)],
                    capsize=3,
                    label=str(label),
                )
            ax.set_xlabel(xlabel)
            ax.set_ylabel(ylabel)
            ax.grid(True, alpha=0.3)
            if not series.empty:
                ax.legend(fontsize="small")
            path = self._base_path / f"{name}.png"
            fig.savefig(path, dpi=self._dpi, bbox_inches="tight", metadata={"Software": None})
        finally:
            plt.close(fig)
        logger.debug("plot_rendered", path=str(path), series=int(series["series"].nunique()) if not series.empty else 0)
        return path
