"""
Estimators and error bars for chain output, plus multiple-histogram reweighting.

Error bars are jackknife errors over the (independent) measurements of one run.
Reweighting solves the self-consistent multiple-histogram equations on exact
energy-lattice bins and carries n₁ and s₁ through per-bin conditional means.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from .graph_state import slot_count
from .hamiltonian import ModelParams
from .mc_engine import RunRecord

logger = logging.getLogger(__name__)

OBSERVABLES = ("u", "c", "m", "s1", "chi_m", "chi_s1")
REWEIGHT_COLUMNS = ["n", "beta", "ensemble", "u", "c", "m", "s1", "chi_m", "chi_s1"]
ESTIMATE_COLUMNS = ["n", "beta", "ensemble", "observable", "value", "stderr", "nsamples"]
TAU_COLUMNS = ["n", "beta", "ensemble", "tau"]

CONVERGENCE_TOL = 1e-10
MAX_ITERATIONS = 100_000
MIN_OVERLAP = 1e-3


class HistogramOverlapError(ValueError):
    """Adjacent runs share too little of their energy histograms."""

    def __init__(self, message: str, betas: Tuple[float, float]):
        super().__init__(message)
        self.betas = betas


@dataclass(frozen=True)
class ObservableEstimate:
    name: str
    value: float
    std_error: float
    n_samples: int
    beta: float
    n: int
    ensemble: str

    def as_row(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "beta": self.beta,
            "ensemble": self.ensemble,
            "observable": self.name,
            "value": self.value,
            "stderr": self.std_error,
            "nsamples": self.n_samples,
        }


def jackknife(columns: Sequence[np.ndarray], statistic: Callable[..., np.ndarray]) -> Tuple[float, float]:
    """
    Jackknife value and error of ``statistic`` applied to sample means.

    ``statistic`` receives one mean per column and must broadcast over numpy
    arrays, since it is also evaluated on all leave-one-out means at once.
    """
    data = [np.asarray(col, dtype=np.float64) for col in columns]
    size = data[0].size
    if size < 2:
        raise ValueError(f"Jackknife needs at least 2 samples, got {size}")
    full = [col.mean() for col in data]
    leave_out = [(col.sum() - col) / (size - 1) for col in data]
    value = float(statistic(*full))
    thetas = np.asarray(statistic(*leave_out), dtype=np.float64)
    spread = ((thetas - thetas.mean()) ** 2).sum()
    return value, float(math.sqrt((size - 1) / size * spread))


def _moments(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # shifting by the first sample keeps a constant series exactly zero
    shifted = x - x[0]
    return shifted, shifted**2


def _variance(mean: np.ndarray, mean_sq: np.ndarray) -> np.ndarray:
    return np.maximum(mean_sq - mean**2, 0.0)


def estimate(record: RunRecord, p: ModelParams) -> List[ObservableEstimate]:
    """u, c, m, s₁, χ_m and χ_{s₁} with jackknife errors for one run."""
    count = len(record.rows)
    if count < 2:
        raise ValueError(f"Need at least 2 measurements for error bars, got {count}")
    cfg = record.config
    n, beta, slots = cfg.n, cfg.beta, slot_count(cfg.n)
    e = record.column("E")
    n1 = record.column("n1")
    s1 = record.column("s1")
    e_shift, e_sq = _moments(e)
    n1_shift, n1_sq = _moments(n1)
    s1_shift, s1_sq = _moments(s1)

    stats = {
        "u": ([e], lambda a: a / n),
        "c": ([e_shift, e_sq], lambda a, b: beta**2 * _variance(a, b) / n),
        "m": ([n1], lambda a: a / slots),
        "s1": ([s1], lambda a: a),
        "chi_m": ([n1_shift, n1_sq], lambda a, b: beta * _variance(a, b) / slots),
        "chi_s1": ([s1_shift, s1_sq], lambda a, b: beta * n * _variance(a, b)),
    }
    out = []
    for name in OBSERVABLES:
        columns, fn = stats[name]
        value, error = jackknife(columns, fn)
        out.append(ObservableEstimate(name, value, error, count, beta, n, cfg.ensemble.value))
    return out


def estimates_frame(estimates: Sequence[ObservableEstimate]) -> pd.DataFrame:
    return pd.DataFrame([est.as_row() for est in estimates], columns=ESTIMATE_COLUMNS)


# ---------------------------------------------------------------------------
# Multiple-histogram reweighting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensityOfStates:
    """Solution of the multiple-histogram equations on the energy lattice."""

    n: int
    ensemble: str
    energies: np.ndarray
    log_g: np.ndarray
    log_z: np.ndarray
    betas: np.ndarray
    cond_e2: np.ndarray
    cond_n1: np.ndarray
    cond_n1_sq: np.ndarray
    cond_s1: np.ndarray
    cond_s1_sq: np.ndarray
    iterations: int

    def observables(self, beta: float) -> Dict[str, float]:
        log_w = self.log_g - beta * self.energies
        prob = np.exp(log_w - logsumexp(log_w))
        n, slots = self.n, slot_count(self.n)
        mean_e = float(prob @ self.energies)
        var_e = max(float(prob @ self.cond_e2) - mean_e**2, 0.0)
        mean_n1 = float(prob @ self.cond_n1)
        var_n1 = max(float(prob @ self.cond_n1_sq) - mean_n1**2, 0.0)
        mean_s1 = float(prob @ self.cond_s1)
        var_s1 = max(float(prob @ self.cond_s1_sq) - mean_s1**2, 0.0)
        return {
            "n": n,
            "beta": beta,
            "ensemble": self.ensemble,
            "u": mean_e / n,
            "c": beta**2 * var_e / n,
            "m": mean_n1 / slots,
            "s1": mean_s1,
            "chi_m": beta * var_n1 / slots,
            "chi_s1": beta * n * var_s1,
        }


def _check_compatible(records: Sequence[RunRecord]) -> None:
    first = records[0].config
    for record in records[1:]:
        cfg = record.config
        if (cfg.n, cfg.params, cfg.ensemble) != (first.n, first.params, first.ensemble):
            raise ValueError(
                f"Runs to combine must share n, model parameters and ensemble: "
                f"beta={first.beta} vs beta={cfg.beta}"
            )


def _lattice_keys(energies: np.ndarray, quantum: float, origin: float) -> np.ndarray:
    if quantum <= 0:
        return np.zeros(energies.size, dtype=np.int64)
    return np.rint((energies - origin) / quantum).astype(np.int64)


def histogram_overlap(a: np.ndarray, b: np.ndarray) -> float:
    """Shared probability mass Σ_E min(h_a(E), h_b(E)) of two normalized histograms."""
    return float(np.minimum(a / a.sum(), b / b.sum()).sum())


def solve_density_of_states(records: Sequence[RunRecord], min_overlap: float = MIN_OVERLAP) -> DensityOfStates:
    """
    Iterate the multiple-histogram equations until the free energies move less than 1e-10.

    log g(E) = log Σ_r H_r(E) − log Σ_r N_r e^{−β_r E − f_r},
    f_r = log Σ_E g(E) e^{−β_r E}, normalized so f_0 = 0.
    """
    if not records:
        raise ValueError("Reweighting needs at least one run")
    _check_compatible(records)
    records = sorted(records, key=lambda r: r.config.beta)
    for record in records:
        if len(record.rows) < 1:
            raise ValueError(f"Run at beta={record.config.beta} has no measurements")
    cfg = records[0].config
    quantum = cfg.params.energy_quantum()

    all_e = np.concatenate([r.column("E") for r in records])
    origin = float(all_e.min())
    keys = _lattice_keys(all_e, quantum, origin)
    lattice, inverse = np.unique(keys, return_inverse=True)
    bins = lattice.size

    run_index = np.concatenate([np.full(len(r.rows), k) for k, r in enumerate(records)])
    hist = np.zeros((len(records), bins))
    np.add.at(hist, (run_index, inverse), 1.0)

    for k in range(len(records) - 1):
        overlap = histogram_overlap(hist[k], hist[k + 1])
        pair = (records[k].config.beta, records[k + 1].config.beta)
        if overlap < min_overlap:
            raise HistogramOverlapError(
                f"Energy histograms at beta={pair[0]} and beta={pair[1]} overlap by {overlap:.2e} "
                f"(< {min_overlap:g}); add an intermediate run", pair)
        if overlap < 10 * min_overlap:
            logger.warning(f"Low histogram overlap {overlap:.3e} between beta={pair[0]} and beta={pair[1]}")

    def conditional(values: np.ndarray) -> np.ndarray:
        sums = np.zeros(bins)
        np.add.at(sums, inverse, values)
        return sums / total

    total = hist.sum(axis=0)
    n1 = np.concatenate([r.column("n1") for r in records])
    s1 = np.concatenate([r.column("s1") for r in records])
    energies = conditional(all_e)
    cond_e2 = conditional(all_e**2)

    betas = np.array([r.config.beta for r in records])
    log_counts = np.log(np.array([len(r.rows) for r in records], dtype=np.float64))
    log_total = np.log(total)
    f = np.zeros(len(records))
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        denom = logsumexp(log_counts[:, None] - f[:, None] - betas[:, None] * energies[None, :], axis=0)
        log_g = log_total - denom
        new_f = logsumexp(log_g[None, :] - betas[:, None] * energies[None, :], axis=1)
        new_f -= new_f[0]
        shift = float(np.max(np.abs(new_f - f)))
        f = new_f
        logger.debug(f"Histogram iteration {iterations}: max free-energy shift {shift:.3e}")
        if shift < CONVERGENCE_TOL:
            break
    else:
        logger.warning(f"Multiple-histogram iteration stopped after {MAX_ITERATIONS} steps")
    log_g = log_total - logsumexp(log_counts[:, None] - f[:, None] - betas[:, None] * energies[None, :], axis=0)

    return DensityOfStates(
        n=cfg.n,
        ensemble=cfg.ensemble.value,
        energies=energies,
        log_g=log_g,
        log_z=f,
        betas=betas,
        cond_e2=cond_e2,
        cond_n1=conditional(n1),
        cond_n1_sq=conditional(n1**2),
        cond_s1=conditional(s1),
        cond_s1_sq=conditional(s1**2),
        iterations=iterations,
    )


def multi_histogram_reweight(records: Sequence[RunRecord], target_betas: Sequence[float],
                             min_overlap: float = MIN_OVERLAP) -> pd.DataFrame:
    """Reweighted u, c, m, s₁, χ_m and χ_{s₁} at each target β inside the simulated range."""
    dos = solve_density_of_states(records, min_overlap)
    low, high = float(dos.betas.min()), float(dos.betas.max())
    rows = []
    for beta in target_betas:
        if not low - 1e-12 <= beta <= high + 1e-12:
            raise ValueError(f"Target beta={beta} lies outside the simulated range [{low}, {high}]")
        rows.append(dos.observables(float(beta)))
    return pd.DataFrame(rows, columns=REWEIGHT_COLUMNS)


def autocorrelation_curve(records: Sequence[RunRecord]) -> pd.DataFrame:
    """(n, β, ensemble, τ) for every converged run, sorted by n, ensemble and β."""
    rows = []
    for record in records:
        cfg = record.config
        if not record.converged:
            logger.warning(f"Skipping non-converged run n={cfg.n} beta={cfg.beta} in the tau table")
            continue
        rows.append({"n": cfg.n, "beta": cfg.beta, "ensemble": cfg.ensemble.value, "tau": record.tau})
    frame = pd.DataFrame(rows, columns=TAU_COLUMNS)
    return frame.sort_values(["n", "ensemble", "beta"], kind="stable").reset_index(drop=True)
