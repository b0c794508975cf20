from abc import ABC, abstractmethod
from pathlib import Path

import pandas as pd


class IResultRepository(ABC):
    """Abstract interface for persisted harness outputs"""

    @abstractmethod
    async def save_frame(self, frame: pd.DataFrame, kind: str, name: str) -> Path:
        """Write a frame under its schema header and return the file path"""
        pass

    @abstractmethod
    async def load_frame(self, path: Path, kind: str) -> pd.DataFrame:
        """Read a frame back, rejecting files of another schema"""
        pass


class IPlotRenderer(ABC):
    """Abstract interface for figure emission"""

    @abstractmethod
    def render(self, series: pd.DataFrame, name: str, xlabel: str, ylabel: str) -> Path:
        """Draw one line per series with error bars and return the image path"""
        pass
