import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

from pydantic import Field, PrivateAttr

from .base import ExperimentTool

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
REQUIRED_FIELDS = ("file", "n", "beta", "ensemble", "stream", "tau", "acceptance_rate", "converged")


def file_sha256(file_path: Union[str, Path]) -> str:
    """Calculate SHA-256 hash of a file."""
    sha256_hash = hashlib.sha256()
    with open(file_path, "rb") as f:
        for byte_block in iter(lambda: f.read(4096), b""):
            sha256_hash.update(byte_block)
    return sha256_hash.hexdigest()


class RunOrganizerTool(ExperimentTool):
    name: str = "Run Organizer Tool"
    description: str = """
    Record the run files of a simulation in a manifest.

    Input should be a JSON object with the following structure:
    {
      "runs": [
        {"file": "runs/free-n7-beta-1-0-unlabeled-stream-3.csv", "n": 7, "beta": 1.0,
         "ensemble": "unlabeled", "stream": 3, "stream_seed": 123, "tau": 1.7,
         "acceptance_rate": 0.41, "converged": true}
      ],
      "seed": 42,                 # master seed
      "config_sha256": "..."      # hash of the effective config
    }

    Every file is validated (it must exist below the output directory and be a .csv)
    and hashed with SHA-256. Returns the path to manifest.json.
    """

    output_dir: str = Field(default="output", description="Directory holding the run files")

    _output_dir: Path = PrivateAttr()

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self._output_dir = Path(self.output_dir)
        self._output_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"RunOrganizerTool initialized with output directory: {self._output_dir}")

    def _validate_run(self, run: Dict[str, Any]) -> List[str]:
        problems = [f"missing field '{key}'" for key in REQUIRED_FIELDS if key not in run]
        if "file" in run:
            path = self._output_dir / run["file"]
            if not path.exists():
                problems.append(f"file not found: {path}")
            elif path.suffix.lower() != ".csv":
                problems.append(f"not a CSV file: {path}")
        return problems

    def _run(self, runs: List[Dict[str, Any]], seed: int, config_sha256: str) -> str:
        """
        Write manifest.json for the given runs.

        Args:
            runs: One entry per run file, paths relative to the output directory
            seed: Master seed of the simulation
            config_sha256: Hash of the effective configuration

        Returns:
            Path to the manifest
        """
        if not runs:
            raise ValueError("No runs to organize")
        errors = []
        entries = []
        for run in runs:
            problems = self._validate_run(run)
            if problems:
                errors.append(f"{run.get('file', '<unnamed>')}: {'; '.join(problems)}")
                continue
            entry = dict(run)
            entry["sha256"] = file_sha256(self._output_dir / run["file"])
            entries.append(entry)
        if errors:
            for error in errors:
                logger.error(error)
            raise ValueError(f"Run validation failed for {len(errors)} file(s): {errors[0]}")

        manifest = {
            "seed": seed,
            "config_sha256": config_sha256,
            "runs": entries,
        }
        manifest_path = self._output_dir / MANIFEST_NAME
        with open(manifest_path, "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, sort_keys=True, allow_nan=False)
            f.write("\n")
        logger.info(f"Saved manifest with {len(entries)} runs to {manifest_path}")
        print(f"✓ Manifest saved to: {manifest_path}")
        return str(manifest_path)


def load_manifest(output_dir: Union[str, Path], verify: bool = True) -> Dict[str, Any]:
    """
    Read manifest.json and, optionally, check every run file against its recorded hash.

    Raises:
        FileNotFoundError: no manifest, or a listed run file is missing
        ValueError: a run file no longer matches its hash
    """
    output_dir = Path(output_dir)
    manifest_path = output_dir / MANIFEST_NAME
    if not manifest_path.exists():
        raise FileNotFoundError(f"No {MANIFEST_NAME} in {output_dir}; run 'simulate' first")
    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = json.load(f)
    if verify:
        for run in manifest["runs"]:
            path = output_dir / run["file"]
            if not path.exists():
                raise FileNotFoundError(f"Run file listed in manifest is missing: {path}")
            if file_sha256(path) != run["sha256"]:
                raise ValueError(f"Run file changed since it was recorded: {path}")
    return manifest
