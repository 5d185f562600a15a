"""
Metropolis single-edge-flip sampler for the labeled and unlabeled ensembles.

A chain runs four phases:
1. pilot sweeps to get a first τ estimate
2. equilibration for 200·max(τ̂, 1) sweeps unless set explicitly
3. a τ run that fixes the measurement spacing ceil(τ)
4. ``target_measurements`` rows, one every ceil(τ) sweeps

One sweep is M = C(n, 2) proposals. A chain owns its state and its RNG stream;
the seed and stream index determine the whole trajectory.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, List, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .autocorrelation import estimate_autocorrelation
from .graph_state import GraphState, UnionFind, edge_pairs, slot_count, states
from .hamiltonian import Ensemble, ModelParams, energy, flip_delta, lattice_level
from .symmetry import automorphism_count, automorphism_count_from_adjacency

logger = logging.getLogger(__name__)

RUN_COLUMNS = ["sweep", "E", "n1", "s1", "gamma"]
DEBUG_CHECK_INTERVAL = 1 << 12


class ChainConfig(BaseModel):
    """Everything that determines one chain."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=2)
    beta: float = Field(ge=0)
    params: ModelParams
    ensemble: Ensemble = Ensemble.UNLABELED
    seed: int = Field(default=0, ge=0, lt=2**64)
    stream: int = Field(default=0, ge=0)
    equilibration_sweeps: Optional[int] = Field(default=None, ge=0)
    target_measurements: int = Field(default=1000, ge=1)
    max_sweeps: int = Field(default=1_000_000, ge=1)
    pilot_sweeps: int = Field(default=200, ge=2)
    tau_sweeps: int = Field(default=2000, ge=2)
    start: Literal["hot", "cold", "auto"] = "auto"
    debug_checks: bool = False
    gamma_cache_size: int = Field(default=0, ge=0)

    @field_validator("beta")
    @classmethod
    def _finite_beta(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError(f"beta must be finite, got {value}")
        return value

    @model_validator(mode="after")
    def _matching_size(self):
        if self.params.n != self.n:
            raise ValueError(f"params.n={self.params.n} does not match n={self.n}")
        return self


class Measurement(NamedTuple):
    sweep: int
    energy: float
    n1: int
    s1: float
    gamma: Optional[int]


@dataclass(frozen=True)
class RunRecord:
    rows: Tuple[Measurement, ...]
    tau: float
    acceptance_rate: float
    converged: bool
    config: ChainConfig
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    def energies(self) -> np.ndarray:
        return np.array([row.energy for row in self.rows], dtype=np.float64)

    def column(self, name: str) -> np.ndarray:
        index = RUN_COLUMNS.index(name)
        return np.array([row[index] for row in self.rows], dtype=np.float64)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.rows), columns=RUN_COLUMNS)


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for grid point ``stream`` of master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))


def derive_stream_seed(seed: int, stream: int) -> int:
    """64-bit fingerprint of the stream, recorded in manifests."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def acceptance_probability(boltzmann_factor, gamma_old: int, gamma_new: int, ensemble: Ensemble):
    """
    Metropolis acceptance for one flip.

    Labeled: min{1, e^{-βΔE}}. Unlabeled: min{1, |Γ(G')|/|Γ(G)| e^{-βΔE}}.
    Works with floats or exact ``Fraction`` factors.
    """
    if Ensemble(ensemble) is Ensemble.LABELED:
        ratio = boltzmann_factor
    else:
        ratio = boltzmann_factor * gamma_new / gamma_old
    return 1 if ratio >= 1 else ratio


def detailed_balance_violations(p: ModelParams, ensemble: Ensemble, q: Fraction = Fraction(1, 3)) -> List[Tuple[int, int]]:
    """
    (bits, edge) pairs where π(G) P(G→G') ≠ π(G') P(G'→G) in exact arithmetic.

    ``q`` stands in for e^{-βJ·step}, so every Boltzmann factor is a rational
    power of it. Enumerates all 2^M states, so keep n small.
    """
    ensemble = Ensemble(ensemble)
    n = p.n
    n_fact = math.factorial(n)
    levels, gammas = {}, {}
    for state in states(n):
        levels[state.bits] = lattice_level(state, p)
        gammas[state.bits] = automorphism_count(state) if ensemble is Ensemble.UNLABELED else 1

    def weight(bits: int) -> Fraction:
        w = q ** levels[bits]
        return w * Fraction(gammas[bits], n_fact) if ensemble is Ensemble.UNLABELED else w

    bad = []
    for bits in levels:
        for e in range(slot_count(n)):
            other = bits ^ (1 << e)
            shift = levels[other] - levels[bits]
            forward = acceptance_probability(q ** shift, gammas[bits], gammas[other], ensemble)
            backward = acceptance_probability(q ** -shift, gammas[other], gammas[bits], ensemble)
            if weight(bits) * forward != weight(other) * backward:
                bad.append((bits, e))
    return bad


def knee_beta(p: ModelParams) -> float:
    """Rough location of the structural transition, used to pick the start state."""
    quantum = abs(p.J * p.delta_e)
    if quantum == 0:
        return math.inf
    return math.log(max(p.n - 2, 2)) / quantum


class ChainState:
    """Mutable Markov-chain state with cached energy, degrees, adjacency and |Γ|."""

    def __init__(self, state: GraphState, beta: float, params: ModelParams, ensemble: Ensemble,
                 gamma_cache_size: int = 0, debug_checks: bool = False):
        if state.n != params.n:
            raise ValueError(f"State has n={state.n} but parameters are for n={params.n}")
        self.n = state.n
        self.m = slot_count(state.n)
        self.beta = beta
        self.params = params
        self.ensemble = Ensemble(ensemble)
        self.debug_checks = debug_checks
        self.bits = state.bits
        self.adj = state.adjacency_masks(1)
        self.d1 = [mask.bit_count() for mask in self.adj]
        self.energy = energy(state, params)
        self.pairs = edge_pairs(self.n)
        self.proposals = 0
        self.accepted = 0
        if gamma_cache_size:
            self.gamma_of = lru_cache(maxsize=gamma_cache_size)(self._compute_gamma)
        else:
            self.gamma_of = self._compute_gamma
        self.gamma = self.gamma_of(self.bits) if self.ensemble is Ensemble.UNLABELED else None

    def _compute_gamma(self, bits: int) -> int:
        return automorphism_count_from_adjacency(GraphState(self.n, bits).adjacency_masks(1))

    @property
    def graph(self) -> GraphState:
        return GraphState(self.n, self.bits)

    @property
    def n1(self) -> int:
        return self.bits.bit_count()

    def s1(self) -> float:
        uf = UnionFind(self.n)
        for e, (i, j) in enumerate(self.pairs):
            if (self.bits >> e) & 1:
                uf.union(i, j)
        return uf.largest() / self.n

    def check_energy(self) -> None:
        full = energy(self.graph, self.params)
        logger.debug(f"Energy spot check after {self.proposals} proposals: cached={self.energy} full={full}")
        if not math.isclose(self.energy, full, rel_tol=1e-9, abs_tol=1e-9):
            raise RuntimeError(f"Cached energy {self.energy} drifted from full recomputation {full}")

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else 0.0


def metropolis_step(state: ChainState, rng: np.random.Generator, edge: Optional[int] = None,
                    u: Optional[float] = None) -> bool:
    """
    Propose flipping one uniformly chosen edge slot and accept or reject it.

    ``edge`` and ``u`` may be supplied by a caller that draws them in blocks;
    otherwise they come from ``rng``. Both factors of the acceptance ratio are
    always evaluated.
    """
    e = int(rng.integers(state.m)) if edge is None else edge
    i, j = state.pairs[e]
    level = (state.bits >> e) & 1
    delta = flip_delta(state.params, level, state.d1[i], state.d1[j])
    boltzmann = math.exp(min(-state.beta * delta, 700.0)) if state.beta else 1.0

    gamma_new = None
    if state.ensemble is Ensemble.UNLABELED:
        gamma_new = state.gamma_of(state.bits ^ (1 << e))
        prob = acceptance_probability(boltzmann, state.gamma, gamma_new, state.ensemble)
    else:
        prob = acceptance_probability(boltzmann, 1, 1, state.ensemble)

    state.proposals += 1
    draw = rng.random() if u is None else u
    accepted = draw < prob
    if accepted:
        state.bits ^= 1 << e
        state.adj[i] ^= 1 << j
        state.adj[j] ^= 1 << i
        change = 1 if level == 0 else -1
        state.d1[i] += change
        state.d1[j] += change
        state.energy += delta
        state.gamma = gamma_new
        state.accepted += 1
    if state.debug_checks and state.proposals % DEBUG_CHECK_INTERVAL == 0:
        state.check_energy()
    return accepted


def sweep(state: ChainState, rng: np.random.Generator) -> None:
    """M proposals with edges and uniforms drawn as one block."""
    edges = rng.integers(state.m, size=state.m)
    draws = rng.random(state.m)
    for e, u in zip(edges.tolist(), draws.tolist()):
        metropolis_step(state, rng, edge=e, u=u)


def initial_state(cfg: ChainConfig, rng: np.random.Generator) -> GraphState:
    """Hot start draws every slot uniformly; cold start takes the lower-energy uniform state."""
    start = cfg.start
    if start == "auto":
        start = "hot" if cfg.beta < knee_beta(cfg.params) else "cold"
    m = slot_count(cfg.n)
    if start == "hot":
        levels = rng.integers(2, size=m)
        bits = sum(1 << e for e, level in enumerate(levels.tolist()) if level)
        return GraphState(cfg.n, bits)
    empty, full = GraphState(cfg.n, 0), GraphState.complete(cfg.n)
    return empty if energy(empty, cfg.params) <= energy(full, cfg.params) else full


def _energy_series(state: ChainState, rng: np.random.Generator, sweeps: int) -> np.ndarray:
    series = np.empty(sweeps, dtype=np.float64)
    for k in range(sweeps):
        sweep(state, rng)
        series[k] = state.energy
    return series


def run_chain(cfg: ChainConfig) -> RunRecord:
    """Equilibrate, measure τ, then record measurements spaced ceil(τ) sweeps apart."""
    rng = make_rng(cfg.seed, cfg.stream)
    state = ChainState(initial_state(cfg, rng), cfg.beta, cfg.params, cfg.ensemble,
                       gamma_cache_size=cfg.gamma_cache_size, debug_checks=cfg.debug_checks)
    label = f"n={cfg.n} beta={cfg.beta:g} {cfg.ensemble.value}"
    budget = cfg.max_sweeps
    used = 0

    pilot_sweeps = min(cfg.pilot_sweeps, budget)
    pilot = estimate_autocorrelation(_energy_series(state, rng, pilot_sweeps)) if pilot_sweeps >= 2 else None
    used += pilot_sweeps
    if cfg.equilibration_sweeps is not None:
        equilibration = cfg.equilibration_sweeps
    else:
        equilibration = 200 * max(math.ceil(pilot.tau) if pilot else 1, 1)
    equilibration = min(equilibration, max(budget - used, 0))
    _energy_series(state, rng, equilibration)
    used += equilibration
    logger.info(f"{label}: equilibrated for {equilibration} sweeps")

    tau_sweeps = min(cfg.tau_sweeps, max(budget - used, 0))
    converged = True
    if tau_sweeps >= 2:
        estimate = estimate_autocorrelation(_energy_series(state, rng, tau_sweeps))
        tau, spacing, converged = estimate.tau, estimate.spacing, estimate.converged
    else:
        tau, spacing, converged = math.inf, 1, False
    used += tau_sweeps
    logger.info(f"{label}: tau={tau:.3f} sweeps, spacing={spacing}")

    wanted = cfg.target_measurements
    affordable = max(budget - used, 0) // spacing
    if affordable < wanted:
        converged = False
        wanted = affordable
    rows: List[Measurement] = []
    for _ in range(wanted):
        for _ in range(spacing):
            sweep(state, rng)
        used += spacing
        rows.append(Measurement(used, state.energy, state.n1, state.s1(), state.gamma))

    if not converged:
        logger.warning(f"{label}: not converged ({len(rows)}/{cfg.target_measurements} measurements, tau={tau:.3f})")
    else:
        logger.info(f"{label}: recorded {len(rows)} measurements, acceptance {state.acceptance_rate:.3f}")
    metadata = {
        "equilibration_sweeps": equilibration,
        "tau_sweeps": tau_sweeps,
        "spacing": spacing,
        "total_sweeps": used,
        "stream_seed": derive_stream_seed(cfg.seed, cfg.stream),
    }
    return RunRecord(
        rows=tuple(rows),
        tau=tau,
        acceptance_rate=state.acceptance_rate,
        converged=converged,
        config=cfg,
        metadata=metadata,
    )


def grid_configs(grid: Sequence[Tuple[int, float]], template: ChainConfig) -> List[ChainConfig]:
    """One config per grid point, on its own RNG stream (the grid index)."""
    if not grid:
        raise ValueError("Parameter grid must not be empty")
    configs = []
    for index, (n, beta) in enumerate(grid):
        configs.append(template.model_copy(update={
            "n": n,
            "beta": float(beta),
            "params": template.params.with_size(n),
            "stream": template.stream + index,
        }))
    return configs


def sweep_parameter_grid(grid: Sequence[Tuple[int, float]], template: ChainConfig, threads: int = 1) -> List[RunRecord]:
    """Run one independent chain per (n, β); results come back in grid order."""
    configs = grid_configs(grid, template)
    if threads > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run_chain, configs))
    else:
        records = [run_chain(cfg) for cfg in configs]
    flagged = [r for r in records if not r.converged]
    if flagged:
        logger.warning(f"{len(flagged)} of {len(records)} chains did not converge")
    return records
