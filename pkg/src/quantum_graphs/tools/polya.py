import logging
from typing import Any, Dict, List

from pydantic import Field

from ..enumeration import unlabeled_edge_counts
from ..experiment import ExperimentConfig
from .base import ExperimentTool
from .csv_save import CsvSaveTool

logger = logging.getLogger(__name__)


class PolyaTool(ExperimentTool):
    name: str = "Polya Enumeration Tool"
    description: str = """
    Write D(n, m), the number of unlabeled graphs on n vertices with m edges,
    as polya_n<k>.csv (columns m, D) for every n of a config.
    """

    output_dir: str = Field(default="output")

    def _run(self, config: ExperimentConfig, metadata: Dict[str, Any]) -> List[str]:
        saver = CsvSaveTool(output_dir=self.output_dir)
        paths = []
        for n in config.n:
            poly = unlabeled_edge_counts(n)
            rows = [{"m": m, "D": count} for m, count in enumerate(poly.coefficients)]
            logger.info(f"n={n}: {poly.total} unlabeled graphs")
            paths.append(saver.run({
                "data": rows,
                "filename": f"polya_n{n}.csv",
                "columns": ["m", "D"],
                "metadata": {**metadata, "n": n},
            }))
        return paths
