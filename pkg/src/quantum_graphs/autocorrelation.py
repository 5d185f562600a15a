"""Integrated autocorrelation time with self-consistent windowing."""

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

WINDOW_FACTOR = 5.0


@dataclass(frozen=True)
class AutocorrelationEstimate:
    tau: float
    window: int
    converged: bool

    @property
    def spacing(self) -> int:
        """Sweeps between effectively independent measurements."""
        return max(1, math.ceil(self.tau))


def autocorrelation_function(series: Sequence[float]) -> np.ndarray:
    """Normalized autocorrelation ρ(t) for t = 0..N-1 via a zero-padded FFT."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ValueError(f"Need a 1-d series of at least 2 values, got shape {x.shape}")
    if np.all(x == x[0]):
        rho = np.zeros(x.size)
        rho[0] = 1.0
        return rho
    x = x - x.mean()
    size = 1 << (2 * x.size - 1).bit_length()
    spectrum = np.fft.rfft(x, n=size)
    acf = np.fft.irfft(spectrum * np.conjugate(spectrum), n=size)[: x.size]
    return acf / acf[0]


def estimate_autocorrelation(series: Sequence[float], window_factor: float = WINDOW_FACTOR) -> AutocorrelationEstimate:
    """
    τ = ½ + Σ_{t=1}^{W} ρ(t), with W the smallest window satisfying W ≥ c·τ(W).

    The window search stops at half the series length. A constant series has
    no fluctuations and returns τ = ½.
    """
    rho = autocorrelation_function(series)
    if rho.size == 1 or not np.any(rho[1:]):
        return AutocorrelationEstimate(tau=0.5, window=1, converged=True)
    limit = max(rho.size // 2, 1)
    taus = 0.5 + np.cumsum(rho[1 : limit + 1])
    windows = np.arange(1, taus.size + 1)
    ok = np.nonzero(windows >= window_factor * taus)[0]
    if ok.size:
        w = int(ok[0])
        return AutocorrelationEstimate(tau=float(taus[w]), window=w + 1, converged=True)
    logger.warning(f"Autocorrelation window did not converge within {rho.size} samples")
    return AutocorrelationEstimate(tau=float(taus[-1]), window=int(windows[-1]), converged=False)


def integrated_autocorrelation_time(series: Sequence[float]) -> float:
    return estimate_autocorrelation(series).tau
