"""
Free and Ising Hamiltonians for D=2 quantum graphs.

Free model:  H = J (E0 n0 + E1 n1)
Ising model: H = J (E0 b0 + E1 b1), with b^k the angle count of G_k

Both carry the extensivity rescalings as default couplings. ``energy_delta``
gives the exact change for a single edge flip from the two endpoint degrees.
"""

import logging
import math
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .graph_state import GraphState, SizeGuardError, angle_count, degrees, edge_pair, edge_pairs
from .symmetry import IsomorphismClass, isomorphism_classes

logger = logging.getLogger(__name__)

GROUND_STATE_LIMIT = 7


class ModelKind(str, Enum):
    FREE = "free"
    ISING = "ising"


class Ensemble(str, Enum):
    LABELED = "labeled"
    UNLABELED = "unlabeled"


def default_coupling(kind: ModelKind, n: int) -> float:
    """
    Coupling J that makes the internal energy extensive.

    Args:
        kind: Model kind
        n: Vertex count (>= 2 for free, >= 3 for ising)

    Returns:
        2/(n-1) for the free model, 1/C(n-1, 2) for the Ising model
    """
    kind = ModelKind(kind)
    if kind is ModelKind.FREE:
        if n < 2:
            raise ValueError(f"Free model needs n >= 2, got {n}")
        return 2.0 / (n - 1)
    if n < 3:
        raise ValueError(f"Ising model needs n >= 3, got {n}")
    return 1.0 / math.comb(n - 1, 2)


class ModelParams(BaseModel):
    """One-particle energies, coupling and size of a model instance."""

    model_config = ConfigDict(frozen=True)

    kind: ModelKind
    n: int = Field(ge=2)
    E0: float = 0.0
    E1: float = 1.0
    J: float = Field(default=None, gt=0)

    @model_validator(mode="before")
    @classmethod
    def _fill_coupling(cls, data):
        if isinstance(data, dict) and data.get("J") is None and "kind" in data and "n" in data:
            data = dict(data)
            data["J"] = default_coupling(data["kind"], data["n"])
        return data

    @model_validator(mode="after")
    def _check_size(self):
        if self.kind is ModelKind.ISING and self.n < 3:
            raise ValueError(f"Ising model needs n >= 3, got {self.n}")
        if not (math.isfinite(self.E0) and math.isfinite(self.E1)):
            raise ValueError("One-particle energies must be finite")
        return self

    @property
    def delta_e(self) -> float:
        return self.E1 - self.E0

    def with_size(self, n: int) -> "ModelParams":
        """Same energies at a new size; J is re-derived only if it was defaulted."""
        j = None if self.J == default_coupling(self.kind, self.n) else self.J
        return ModelParams(kind=self.kind, n=n, E0=self.E0, E1=self.E1, J=j)

    def lattice_step(self) -> Fraction:
        """Energy-lattice spacing in units of J, as an exact fraction."""
        if self.kind is ModelKind.FREE:
            return abs(_as_fraction(self.delta_e))
        step = Fraction(0)
        for value in (self.E0, self.E1):
            x = abs(_as_fraction(value))
            if x:
                step = x if not step else Fraction(
                    math.gcd(step.numerator * x.denominator, x.numerator * step.denominator),
                    step.denominator * x.denominator,
                )
        return step

    def energy_quantum(self) -> float:
        """Spacing of the energy lattice, used for exact histogram bins."""
        return self.J * float(self.lattice_step())


def _as_fraction(value: float) -> Fraction:
    return Fraction(value).limit_denominator(10**6)


def _check_size(state: GraphState, p: ModelParams) -> None:
    if state.n != p.n:
        raise ValueError(f"State has n={state.n} but parameters are for n={p.n}")


def energy_from_counts(p: ModelParams, n0, n1, b0=None, b1=None):
    """Energy from edge and angle counts; works on scalars or numpy arrays."""
    if p.kind is ModelKind.FREE:
        return p.J * (p.E0 * n0 + p.E1 * n1)
    return p.J * (p.E0 * b0 + p.E1 * b1)


def energy(state: GraphState, p: ModelParams) -> float:
    _check_size(state, p)
    if p.kind is ModelKind.FREE:
        return energy_from_counts(p, state.n0, state.n1)
    return energy_from_counts(p, state.n0, state.n1, angle_count(state, 0), angle_count(state, 1))


def energy_exact(state: GraphState, p: ModelParams) -> Fraction:
    """``energy`` evaluated in rational arithmetic on the float parameters."""
    _check_size(state, p)
    j, e0, e1 = Fraction(p.J), Fraction(p.E0), Fraction(p.E1)
    if p.kind is ModelKind.FREE:
        return j * (e0 * state.n0 + e1 * state.n1)
    return j * (e0 * angle_count(state, 0) + e1 * angle_count(state, 1))


def lattice_level(state: GraphState, p: ModelParams) -> int:
    """
    Integer k with E = J (offset + k · lattice_step); the offset is E0·M for the free model, 0 for Ising.

    Returns 0 when all energies coincide.
    """
    _check_size(state, p)
    step = p.lattice_step()
    if not step:
        return 0
    e0, e1 = _as_fraction(p.E0), _as_fraction(p.E1)
    if p.kind is ModelKind.FREE:
        level = (e1 - e0) * state.n1 / step
    else:
        level = (e0 * angle_count(state, 0) + e1 * angle_count(state, 1)) / step
    if level.denominator != 1:
        raise ArithmeticError(f"Energy of {state} is off the lattice of step {step}")
    return level.numerator


def energy_degree_form(state: GraphState, p: ModelParams) -> float:
    """Ising energy as J Σ_k E_k Σ_i C(d^k_i, 2)."""
    _check_size(state, p)
    total = 0.0
    for level, e_k in ((0, p.E0), (1, p.E1)):
        total += e_k * sum(math.comb(d, 2) for d in degrees(state, level))
    return p.J * total


def energy_degree_squared_form(state: GraphState, p: ModelParams) -> float:
    """Recast Ising energy J Σ_k E_k (½ Σ_i (d^k_i)² − n_k)."""
    _check_size(state, p)
    total = 0.0
    for level, e_k, n_k in ((0, p.E0, state.n0), (1, p.E1, state.n1)):
        d = np.asarray(degrees(state, level), dtype=np.int64)
        total += e_k * (0.5 * float(d @ d) - n_k)
    return p.J * total


@lru_cache(maxsize=None)
def _line_graph_adjacency(n: int) -> np.ndarray:
    line = nx.line_graph(nx.complete_graph(n))
    order = [tuple(sorted(pair)) for pair in edge_pairs(n)]
    index = {pair: e for e, pair in enumerate(order)}
    a = np.zeros((len(order), len(order)), dtype=np.int64)
    for u, v in line.edges():
        a[index[tuple(sorted(u))], index[tuple(sorted(v))]] = 1
        a[index[tuple(sorted(v))], index[tuple(sorted(u))]] = 1
    return a


def energy_line_graph_form(state: GraphState, p: ModelParams) -> float:
    """Ising energy as the quadratic form ½ Σ_k E_k x_kᵀ L x_k over the line graph of K_n."""
    _check_size(state, p)
    lg = _line_graph_adjacency(state.n)
    x1 = np.array([state.level(e) for e in range(state.m)], dtype=np.int64)
    x0 = 1 - x1
    b0 = int(x0 @ lg @ x0) // 2
    b1 = int(x1 @ lg @ x1) // 2
    return p.J * (p.E0 * b0 + p.E1 * b1)


def flip_delta(p: ModelParams, level: int, d1_i: int, d1_j: int) -> float:
    """
    Energy change for flipping edge {i, j} currently at ``level``.

    ``d1_i`` and ``d1_j`` are the level-1 degrees of the endpoints before the
    flip. For the Ising model with the flip a -> b:
    ΔE = J [E_b (d^b_i + d^b_j) − E_a (d^a_i + d^a_j − 2)].
    """
    if p.kind is ModelKind.FREE:
        step = p.J * p.delta_e
        return step if level == 0 else -step
    d0_i, d0_j = p.n - 1 - d1_i, p.n - 1 - d1_j
    if level == 0:
        return p.J * (p.E1 * (d1_i + d1_j) - p.E0 * (d0_i + d0_j - 2))
    return p.J * (p.E0 * (d0_i + d0_j) - p.E1 * (d1_i + d1_j - 2))


def energy_delta(state: GraphState, e: int, p: ModelParams) -> float:
    _check_size(state, p)
    i, j = edge_pair(e, state.n)
    d1 = degrees(state, 1)
    return flip_delta(p, state.level(e), d1[i], d1[j])


def ground_states(p: ModelParams, long_run: bool = False) -> Tuple[IsomorphismClass, ...]:
    """
    Minimal-energy isomorphism classes, found exhaustively over canonical representatives.

    Energies are compared in rational arithmetic so degenerate classes tie exactly.
    """
    limit = 10 if long_run else GROUND_STATE_LIMIT
    if p.n > limit:
        raise SizeGuardError(f"Ground-state search refused for n={p.n} > {limit}")
    best: Optional[Fraction] = None
    found = []
    for cls in isomorphism_classes(p.n):
        value = energy_exact(cls.representative, p)
        if best is None or value < best:
            best, found = value, [cls]
        elif value == best:
            found.append(cls)
    logger.debug("%d ground-state classes for %s n=%d at E=%s", len(found), p.kind.value, p.n, best)
    return tuple(found)


def free_equivalent(p: ModelParams) -> Tuple[ModelParams, float]:
    """
    Free model matching an Ising model with E0 = −E1, plus the constant offset.

    With E0 = −E1 the angle counts satisfy b0 = b1 + n C(n−1, 2) − 2 (n−2) n1, so
    H_Ising = J E1 (2 (n−2) n1 − n C(n−1, 2)): a free model with E0' = 0 and
    E1' = 2 (n−2) E1 at the same J, shifted by −J E1 n C(n−1, 2).
    """
    if p.kind is not ModelKind.ISING or p.E0 != -p.E1:
        raise ValueError("Free reduction needs an Ising model with E0 = -E1")
    free = ModelParams(kind=ModelKind.FREE, n=p.n, E0=0.0, E1=2.0 * (p.n - 2) * p.E1, J=p.J)
    offset = -p.J * p.E1 * p.n * math.comb(p.n - 1, 2)
    return free, offset
