import io
import re
from pathlib import Path
from typing import Union

import aiofiles
import pandas as pd

from ...domain.entities.records import SCHEMAS, schema_header
from ...domain.exceptions import MalformedResultsError
from ...domain.interfaces.results import IResultRepository
from ...logging_config import get_logger

logger = get_logger(__name__)


class CsvResultRepository(IResultRepository):
    """Versioned CSV files under one output directory"""

    def __init__(self, base_path: Union[str, Path] = "results"):
        self._base_path = Path(base_path)
        self._base_path.mkdir(parents=True, exist_ok=True)

    @property
    def base_path(self) -> Path:
        return self._base_path

    async def save_frame(self, frame: pd.DataFrame, kind: str, name: str) -> Path:
        """Write the frame in its documented column order below a schema header"""
        columns = self._columns(kind)
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise MalformedResultsError(f"{kind} frame is missing columns {missing}")

        path = self._base_path / f"{self._sanitize_name(name)}.csv"
        body = frame.loc[:, list(columns)].to_csv(index=False, lineterminator="\n")
        async with aiofiles.open(path, "w", encoding="utf-8", newline="") as f:
            await f.write(schema_header(kind) + "\n")
            await f.write(body)
        logger.info("results_saved", kind=kind, path=str(path), rows=len(frame))
        return path

    async def load_frame(self, path: Union[str, Path], kind: str) -> pd.DataFrame:
        """Read a file back; wrong header or missing columns raise MalformedResultsError"""
        columns = self._columns(kind)
        path = Path(path)
        if not path.is_file():
            raise MalformedResultsError(f"Results file not found: {path}")

        async with aiofiles.open(path, "r", encoding="utf-8") as f:
            text = await f.read()
        header, _, body = text.partition("\n")
        if header.strip() != schema_header(kind):
            raise MalformedResultsError(f"{path} is not a {kind} file (header '{header.strip()}')")
        if not body.strip():
            raise MalformedResultsError(f"{path} has no column row")
        try:
            frame = pd.read_csv(io.StringIO(body))
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise MalformedResultsError(f"{path} could not be parsed: {exc}") from exc
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise MalformedResultsError(f"{path} is missing columns {missing}")
        return frame

    @staticmethod
    def _columns(kind: str):
        if kind not in SCHEMAS:
            raise MalformedResultsError(f"Unknown results kind '{kind}'")
        return SCHEMAS[kind]

    @staticmethod
    def _sanitize_name(name: str) -> str:
        safe = re.sub(r"[^A-Za-z0-9._-]", "_", Path(name).name)
        if not safe or safe in (".", ".."):
            raise ValueError(f"Invalid results name '{name}'")
        return safe[:-4] if safe.endswith(".csv") else safe
