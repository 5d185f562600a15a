import logging
import math
from typing import Any, Dict, List, Optional

from pydantic import Field
from slugify import slugify

from ..experiment import ExperimentConfig
from ..mc_engine import RUN_COLUMNS, RunRecord, sweep_parameter_grid
from .base import ExperimentTool
from .csv_save import CsvSaveTool
from .run_organizer import RunOrganizerTool

logger = logging.getLogger(__name__)


def run_filename(record: RunRecord) -> str:
    """File name of one chain; the stream index keeps nearby betas apart."""
    cfg = record.config
    label = f"{cfg.params.kind.value} n{cfg.n} beta {cfg.beta!r} {cfg.ensemble.value} stream {cfg.stream}"
    return f"runs/{slugify(label)}.csv"


def finite_or_none(value: float) -> Optional[float]:
    """JSON has no infinity; an unconverged tau is written as null."""
    return value if math.isfinite(value) else None


class SimulateTool(ExperimentTool):
    name: str = "Simulate Tool"
    description: str = """
    Run one Metropolis chain per (n, beta, ensemble) of a config, write one CSV
    per chain under runs/ (columns sweep, E, n1, s1, gamma) and a manifest.json
    with seeds, tau, acceptance rates, convergence flags and file hashes.
    """

    output_dir: str = Field(default="output")
    threads: int = Field(default=1, ge=1)

    def _run(self, config: ExperimentConfig, metadata: Dict[str, Any]) -> str:
        grid = config.grid()
        saver = CsvSaveTool(output_dir=self.output_dir)
        entries: List[Dict[str, Any]] = []
        for index, ensemble in enumerate(config.ensembles()):
            template = config.chain_template(ensemble).model_copy(update={"stream": index * len(grid)})
            logger.info(f"Simulating {len(grid)} {ensemble.value} chains on {self.threads} worker(s)")
            try:
                records = sweep_parameter_grid(grid, template, threads=self.threads)
            except ValueError as e:
                raise ValueError(f"simulate: {ensemble.value}: {e}")
            for record in records:
                cfg = record.config
                filename = run_filename(record)
                run_metadata = {
                    **metadata,
                    "chain": cfg.model_dump(mode="json"),
                    "tau": finite_or_none(record.tau),
                    "converged": record.converged,
                }
                saver.run({
                    "data": record.to_frame(),
                    "filename": filename,
                    "columns": RUN_COLUMNS,
                    "metadata": run_metadata,
                })
                entries.append({
                    "file": filename,
                    "n": cfg.n,
                    "beta": cfg.beta,
                    "ensemble": cfg.ensemble.value,
                    "stream": cfg.stream,
                    "stream_seed": record.metadata.get("stream_seed"),
                    "tau": finite_or_none(record.tau),
                    "acceptance_rate": record.acceptance_rate,
                    "converged": record.converged,
                    "measurements": len(record.rows),
                })
        organizer = RunOrganizerTool(output_dir=self.output_dir)
        return organizer.run({"runs": entries, "seed": config.seed, "config_sha256": config.sha256()})
