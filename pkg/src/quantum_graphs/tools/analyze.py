import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Any, Dict, List, Literal, Union

import numpy as np
import pandas as pd
from pydantic import Field

from ..analysis import (
    ESTIMATE_COLUMNS,
    REWEIGHT_COLUMNS,
    TAU_COLUMNS,
    HistogramOverlapError,
    autocorrelation_curve,
    estimate,
    estimates_frame,
    multi_histogram_reweight,
)
from ..experiment import ExperimentConfig
from ..mc_engine import ChainConfig, Measurement, RunRecord
from .base import ExperimentTool
from .csv_save import CsvSaveTool, read_csv_with_metadata
from .run_organizer import load_manifest

logger = logging.getLogger(__name__)

FLUCTUATION_OBSERVABLES = ("c", "chi_m", "chi_s1")


def load_run_records(output_dir: Union[str, Path]) -> List[RunRecord]:
    """Rebuild RunRecords from the manifest and run CSVs of a ``simulate`` output directory."""
    output_dir = Path(output_dir)
    manifest = load_manifest(output_dir)
    records = []
    for run in manifest["runs"]:
        frame, meta = read_csv_with_metadata(output_dir / run["file"])
        cfg = ChainConfig.model_validate(meta["chain"])
        rows = tuple(
            Measurement(
                int(row.sweep),
                float(row.E),
                int(row.n1),
                float(row.s1),
                None if pd.isna(row.gamma) else int(row.gamma),
            )
            for row in frame.itertuples(index=False)
        )
        records.append(RunRecord(
            rows=rows,
            tau=math.inf if run["tau"] is None else float(run["tau"]),
            acceptance_rate=float(run["acceptance_rate"]),
            converged=bool(run["converged"]),
            config=cfg,
            metadata={"file": run["file"]},
        ))
    return records


def check_non_negative(frame: pd.DataFrame, source: str) -> None:
    """Raise ArithmeticError if any c, chi_m or chi_s1 entry of ``frame`` is negative.

    Accepts both the wide reweighted layout (one column per observable) and the
    long estimates layout (observable, value).
    """
    if "observable" in frame.columns:
        rows = frame[frame["observable"].isin(FLUCTUATION_OBSERVABLES) & (frame["value"] < 0)]
        bad = sorted(set(rows["observable"]))
    else:
        bad = [c for c in FLUCTUATION_OBSERVABLES if (frame[c] < 0).any()]
    if bad:
        raise ArithmeticError(f"Negative fluctuation observables in {source}: {bad}")


class AnalyzeTool(ExperimentTool):
    name: str = "Analyze Tool"
    description: str = """
    Turn simulate output into curves.

    mode "analyze": jackknife estimates of u, c, m, s1, chi_m, chi_s1 per run (estimates.csv).
    mode "reweight": multiple-histogram curves per (n, ensemble) on reweight_points
    betas spanning the simulated range (reweighted.csv), plus tau.csv.
    """

    output_dir: str = Field(default="output")

    def _analyze(self, records: List[RunRecord]) -> pd.DataFrame:
        estimates = []
        for record in records:
            cfg = record.config
            if not record.converged:
                logger.warning(f"Run n={cfg.n} beta={cfg.beta} {cfg.ensemble.value} is not converged")
            try:
                estimates.extend(estimate(record, cfg.params))
            except ValueError as e:
                raise ValueError(f"analyze: n={cfg.n} beta={cfg.beta} {cfg.ensemble.value}: {e}")
        return estimates_frame(estimates)

    def _reweight(self, records: List[RunRecord], points: int) -> pd.DataFrame:
        groups: Dict[tuple, List[RunRecord]] = defaultdict(list)
        for record in records:
            groups[(record.config.n, record.config.ensemble.value)].append(record)
        frames = []
        for (n, ensemble), group in sorted(groups.items()):
            betas = [r.config.beta for r in group]
            targets = np.linspace(min(betas), max(betas), points)
            try:
                frames.append(multi_histogram_reweight(group, targets))
            except HistogramOverlapError as e:
                raise HistogramOverlapError(f"reweight: n={n} {ensemble}: {e}", e.betas)
        if not frames:
            return pd.DataFrame(columns=REWEIGHT_COLUMNS)
        return pd.concat(frames, ignore_index=True)

    def _run(self, config: ExperimentConfig, metadata: Dict[str, Any],
             mode: Literal["analyze", "reweight"] = "analyze") -> List[str]:
        records = load_run_records(self.output_dir)
        saver = CsvSaveTool(output_dir=self.output_dir)
        if mode == "analyze":
            frame = self._analyze(records)
            check_non_negative(frame, "estimates")
            return [saver.run({"data": frame, "filename": "estimates.csv",
                               "columns": ESTIMATE_COLUMNS, "metadata": metadata})]
        if mode != "reweight":
            raise ValueError(f"Unknown analysis mode: {mode}")
        curves = self._reweight(records, config.reweight_points)
        taus = autocorrelation_curve(records)
        check_non_negative(curves, "reweighted curves")
        logger.info(f"Reweighted {len(curves)} points; tau table has {len(taus)} rows")
        return [
            saver.run({"data": curves, "filename": "reweighted.csv", "columns": REWEIGHT_COLUMNS, "metadata": metadata}),
            saver.run({"data": taus, "filename": "tau.csv", "columns": TAU_COLUMNS, "metadata": metadata}),
        ]
