import logging
from typing import Any, Dict, List

from pydantic import Field

from ..enumeration import (
    EXHAUSTIVE_LIMIT,
    LONG_EXHAUSTIVE_LIMIT,
    exact_observables,
    labeled_free_observables,
    polya_free_thermo,
)
from ..experiment import ExperimentConfig
from ..hamiltonian import Ensemble, ModelKind
from .base import ExperimentTool
from .csv_save import CsvSaveTool

logger = logging.getLogger(__name__)

EXACT_COLUMNS = ["n", "beta", "ensemble", "f", "u", "c", "s1", "chi_s1", "m", "chi_m"]


class ExactTool(ExperimentTool):
    name: str = "Exact Thermodynamics Tool"
    description: str = """
    Write exact thermodynamics (exact.csv) for every (n, beta, ensemble) of a config.

    Small n uses exhaustive sums over isomorphism classes. Beyond that the free
    model still has exact answers: Pólya enumeration (unlabeled) and closed forms
    (labeled). Points with no exact method are skipped with a warning.
    """

    output_dir: str = Field(default="output")

    def _observables(self, config: ExperimentConfig, n: int, beta: float, ensemble: Ensemble, long_run: bool):
        p = config.model_params(n)
        limit = LONG_EXHAUSTIVE_LIMIT if long_run else EXHAUSTIVE_LIMIT
        if n <= limit:
            return exact_observables(beta, p, ensemble, long_run=long_run)
        if p.kind is ModelKind.FREE and ensemble is Ensemble.UNLABELED:
            return polya_free_thermo(beta, p)
        if p.kind is ModelKind.FREE:
            return labeled_free_observables(beta, p)
        return None

    def _run(self, config: ExperimentConfig, metadata: Dict[str, Any], long_run: bool = False) -> str:
        rows: List[Dict[str, Any]] = []
        skipped = set()
        for n in config.n:
            for ensemble in config.ensembles():
                for beta in config.betas():
                    result = self._observables(config, n, beta, ensemble, long_run)
                    if result is None:
                        skipped.add((n, ensemble.value))
                        continue
                    rows.append(result.as_row(n, ensemble))
        for n, ensemble in sorted(skipped):
            logger.warning(f"No exact method for {config.model.value} {ensemble} at n={n}; skipped")
        logger.info(f"Computed {len(rows)} exact points")
        saver = CsvSaveTool(output_dir=self.output_dir)
        return saver.run({"data": rows, "filename": "exact.csv", "columns": EXACT_COLUMNS, "metadata": metadata})
