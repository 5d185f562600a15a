import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import pandas as pd
from pydantic import Field, PrivateAttr

from .base import ExperimentTool

logger = logging.getLogger(__name__)

METADATA_PREFIX = "# "


class CsvSaveTool(ExperimentTool):
    name: str = "CSV Save Tool"
    description: str = """
    Save a table as CSV in the output directory or any subdirectory.

    Input:
      - data: a pandas DataFrame or a list of row dictionaries
      - filename: file name relative to the output directory (e.g. "runs/free-n7-beta-1-0-labeled-stream-0.csv")
      - columns: optional column order; required when data is an empty list
      - metadata: optional dictionary written as "# key: value" lines above the header

    Returns the path to the saved file.
    """

    output_dir: str = Field(default="output", description="Directory all files are written under")

    _output_dir: Path = PrivateAttr()

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self._output_dir = Path(self.output_dir)
        self._output_dir.mkdir(parents=True, exist_ok=True)

    def _run(
        self,
        data: Union[pd.DataFrame, List[Dict[str, Any]]],
        filename: str,
        columns: Optional[List[str]] = None,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> str:
        """
        Save rows as CSV.

        Args:
            data: DataFrame or list of row dictionaries
            filename: Name of the file, may include subdirectories
            columns: Column order to enforce
            metadata: Header lines identifying the producing command

        Returns:
            Path to the saved file
        """
        if isinstance(data, pd.DataFrame):
            frame = data if columns is None else data[columns]
        elif isinstance(data, list):
            frame = pd.DataFrame(data, columns=columns)
        else:
            raise TypeError(f"Data must be a DataFrame or a list of rows, got {type(data).__name__}")

        # Keep every file under the output directory
        if filename.startswith(f"{self._output_dir.name}/"):
            filename = filename.split("/", 1)[1]
        file_path = self._output_dir / filename
        file_path.parent.mkdir(parents=True, exist_ok=True)

        try:
            with open(file_path, "w", encoding="utf-8", newline="") as f:
                for key, value in (metadata or {}).items():
                    text = value if isinstance(value, str) else json.dumps(value, sort_keys=True, separators=(",", ":"))
                    f.write(f"{METADATA_PREFIX}{key}: {text}\n")
                frame.to_csv(f, index=False, lineterminator="\n")
        except OSError as e:
            raise RuntimeError(f"Error saving CSV to {file_path}: {e}")
        print(f"✓ CSV saved to: {file_path}")
        return str(file_path)


def read_metadata(path: Union[str, Path]) -> Dict[str, Any]:
    """Parse the "# key: value" header of a CSV written by ``CsvSaveTool``."""
    metadata: Dict[str, Any] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith(METADATA_PREFIX):
                break
            key, _, text = line[len(METADATA_PREFIX):].rstrip("\n").partition(": ")
            try:
                metadata[key] = json.loads(text)
            except json.JSONDecodeError:
                metadata[key] = text
    return metadata


def read_csv_with_metadata(path: Union[str, Path]) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Input CSV not found: {path}")
    return pd.read_csv(path, comment="#"), read_metadata(path)
