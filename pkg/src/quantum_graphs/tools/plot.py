import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402
from pydantic import Field  # noqa: E402

from ..analysis import OBSERVABLES  # noqa: E402
from .base import ExperimentTool  # noqa: E402
from .csv_save import read_csv_with_metadata  # noqa: E402

logger = logging.getLogger(__name__)

LINESTYLES = {"unlabeled": "-", "labeled": "--"}
MARKERS = {"unlabeled": "o", "labeled": "s"}
REWEIGHTED_STYLE = {"linewidth": 2.5, "alpha": 0.45}
LABELS = {
    "u": "u = <E>/n",
    "c": "c = β²Var(E)/n",
    "m": "m = <n₁>/M",
    "s1": "s₁",
    "chi_m": "χ_m",
    "chi_s1": "χ_s₁",
}

plt.rcParams["svg.hashsalt"] = "quantum-graphs"


def _maybe_read(path: Path) -> Optional[pd.DataFrame]:
    if not path.exists():
        return None
    frame, _ = read_csv_with_metadata(path)
    return frame


def _series_key(row_n: int, ensemble: str) -> str:
    return f"n={row_n} {ensemble}"


class PlotTool(ExperimentTool):
    name: str = "Plot Tool"
    description: str = """
    Draw one SVG per observable (u, c, m, s1, chi_m, chi_s1) against β from the
    CSVs already in the output directory, plus tau.svg when tau.csv exists.
    Solid lines are unlabeled and dashed lines labeled. Exact curves are thin
    lines, reweighted curves are wide translucent lines, and jackknife
    estimates are error bars (circles unlabeled, squares labeled).
    """

    output_dir: str = Field(default="output")

    @staticmethod
    def _draw_observable(ax, name: str, exact, estimates, reweighted) -> bool:
        drawn = False
        if exact is not None and name in exact:
            for (n, ensemble), group in exact.groupby(["n", "ensemble"], sort=True):
                group = group.sort_values("beta")
                if group[name].isna().all():
                    continue
                ax.plot(group["beta"], group[name], LINESTYLES.get(ensemble, "-"),
                        label=f"exact {_series_key(n, ensemble)}")
                drawn = True
        if reweighted is not None and name in reweighted:
            for (n, ensemble), group in reweighted.groupby(["n", "ensemble"], sort=True):
                group = group.sort_values("beta")
                ax.plot(group["beta"], group[name], LINESTYLES.get(ensemble, "-"), **REWEIGHTED_STYLE,
                        label=f"reweighted {_series_key(n, ensemble)}")
                drawn = True
        if estimates is not None:
            rows = estimates[estimates["observable"] == name]
            for (n, ensemble), group in rows.groupby(["n", "ensemble"], sort=True):
                group = group.sort_values("beta")
                ax.errorbar(group["beta"], group["value"], yerr=group["stderr"],
                            fmt=MARKERS.get(ensemble, "o"), ms=3, capsize=2,
                            label=f"MC {_series_key(n, ensemble)}")
                drawn = True
        return drawn

    def _observable_figure(self, name: str, exact, estimates, reweighted) -> Optional[str]:
        fig, ax = plt.subplots(figsize=(6, 4))
        if not self._draw_observable(ax, name, exact, estimates, reweighted):
            plt.close(fig)
            return None
        ax.set_xlabel("β")
        ax.set_ylabel(LABELS[name])
        ax.legend(fontsize="small")
        fig.tight_layout()
        path = Path(self.output_dir) / f"{name}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        return str(path)

    def _tau_figure(self, taus: pd.DataFrame) -> str:
        fig, ax = plt.subplots(figsize=(6, 4))
        for (n, ensemble), group in taus.groupby(["n", "ensemble"], sort=True):
            group = group.sort_values("beta")
            ax.plot(group["beta"], group["tau"], LINESTYLES.get(ensemble, "-"), marker="o", ms=3,
                    label=_series_key(n, ensemble))
        ax.set_xlabel("β")
        ax.set_ylabel("τ (sweeps)")
        ax.set_yscale("log")
        ax.legend(fontsize="small")
        fig.tight_layout()
        path = Path(self.output_dir) / "tau.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        return str(path)

    def _run(self, config: Any = None, metadata: Optional[Dict[str, Any]] = None) -> List[str]:
        out = Path(self.output_dir)
        exact = _maybe_read(out / "exact.csv")
        estimates = _maybe_read(out / "estimates.csv")
        reweighted = _maybe_read(out / "reweighted.csv")
        taus = _maybe_read(out / "tau.csv")
        if all(frame is None for frame in (exact, estimates, reweighted, taus)):
            raise FileNotFoundError(f"Nothing to plot in {out}: run exact, analyze or reweight first")

        paths = []
        for name in OBSERVABLES:
            path = self._observable_figure(name, exact, estimates, reweighted)
            if path:
                paths.append(path)
                print(f"✓ Plot saved to: {path}")
        if taus is not None and not taus.empty:
            path = self._tau_figure(taus)
            paths.append(path)
            print(f"✓ Plot saved to: {path}")
        logger.info(f"Wrote {len(paths)} figures")
        return paths
