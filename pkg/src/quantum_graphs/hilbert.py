"""
Operator algebra on the tensor-product edge basis, at toy scale.

Each of the M = n(n-1)/2 edge slots carries a D-level one-particle space.
Kets are level tuples in the same slot order as ``graph_state``. The
antisymmetric sector attaches a sign to every edge ket whose vertex labels come
out reversed after a relabeling, |n>_[ij] = -|n>_[ji]; the symmetric sector
does not.

Amplitudes are exact ``Fraction``s so operator identities are checked exactly.
Every enumeration over S_n or the full basis is behind a hard size guard.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Tuple

import numpy as np

from .graph_state import SizeGuardError, edge_index, edge_pairs, slot_count
from .symmetry import Permutation, all_permutations

logger = logging.getLogger(__name__)

MAX_SYMMETRIZE_N = 6
MAX_BASIS_SIZE = 2**24

Levels = Tuple[int, ...]


class Sector(str, Enum):
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"


@dataclass(frozen=True)
class BasisKet:
    """Tensor-product basis ket: one level in 0..d-1 per edge slot."""

    n: int
    d: int
    levels: Levels
    sector: Sector = Sector.ANTISYMMETRIC

    def __post_init__(self):
        levels = tuple(self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) != slot_count(self.n):
            raise ValueError(f"Expected {slot_count(self.n)} slot levels for n={self.n}, got {len(levels)}")
        if any(not 0 <= x < self.d for x in levels):
            raise ValueError(f"Levels must lie in 0..{self.d - 1}: {levels}")

    @classmethod
    def from_level_sets(cls, n: int, d: int, level_edges: Dict[int, Iterable[Tuple[int, int]]],
                        sector: Sector = Sector.ANTISYMMETRIC) -> "BasisKet":
        """Build from the occupation-graph form; unlisted slots sit at level 0."""
        levels = [0] * slot_count(n)
        for level, edges in level_edges.items():
            for i, j in edges:
                levels[edge_index(i, j, n)] = level
        return cls(n, d, tuple(levels), sector)

    def occupation_graphs(self) -> List[List[Tuple[int, int]]]:
        """Weak ordered partition (G_0, ..., G_{D-1}) of the edge set."""
        parts: List[List[Tuple[int, int]]] = [[] for _ in range(self.d)]
        for pair, level in zip(edge_pairs(self.n), self.levels):
            parts[level].append(pair)
        return parts


@dataclass
class StateVector:
    """Sparse superposition of basis kets sharing (n, d, sector)."""

    n: int
    d: int
    sector: Sector = Sector.ANTISYMMETRIC
    amplitudes: Dict[Levels, Fraction] = field(default_factory=dict)

    @classmethod
    def of(cls, ket: BasisKet, amplitude=1) -> "StateVector":
        vec = cls(ket.n, ket.d, ket.sector)
        vec.add(ket.levels, Fraction(amplitude))
        return vec

    def empty_like(self) -> "StateVector":
        return StateVector(self.n, self.d, self.sector)

    def add(self, levels: Levels, amplitude: Fraction) -> None:
        value = self.amplitudes.get(levels, Fraction(0)) + amplitude
        if value:
            self.amplitudes[levels] = value
        else:
            self.amplitudes.pop(levels, None)

    def scaled(self, factor) -> "StateVector":
        out = self.empty_like()
        for levels, amp in self.amplitudes.items():
            out.add(levels, amp * factor)
        return out

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_compatible(self, other)
        out = self.scaled(1)
        for levels, amp in other.amplitudes.items():
            out.add(levels, amp)
        return out

    def __sub__(self, other: "StateVector") -> "StateVector":
        return self + other.scaled(-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, StateVector):
            return NotImplemented
        return (self.n, self.d, self.sector, self.amplitudes) == (other.n, other.d, other.sector, other.amplitudes)

    def is_zero(self) -> bool:
        return not self.amplitudes

    def kets(self) -> Iterator[BasisKet]:
        for levels in sorted(self.amplitudes):
            yield BasisKet(self.n, self.d, levels, self.sector)

    def as_floats(self) -> Dict[Levels, float]:
        return {levels: float(amp) for levels, amp in sorted(self.amplitudes.items())}


def _check_compatible(a: StateVector, b: StateVector) -> None:
    if (a.n, a.d, a.sector) != (b.n, b.d, b.sector):
        raise ValueError(f"Incompatible vectors: {(a.n, a.d, a.sector)} vs {(b.n, b.d, b.sector)}")


def _check_slot(e: int, n: int) -> None:
    if not 0 <= e < slot_count(n):
        raise ValueError(f"Edge slot {e} out of range for n={n}")


# ---------------------------------------------------------------------------
# Ladder, indicator and number operators
# ---------------------------------------------------------------------------


def ladder_apply(direction: str, e: int, v: StateVector) -> StateVector:
    """L^+ or L^- on slot ``e``; kets at the boundary level are annihilated."""
    if direction not in ("+", "-"):
        raise ValueError(f"Ladder direction must be '+' or '-', got {direction!r}")
    _check_slot(e, v.n)
    step = 1 if direction == "+" else -1
    out = v.empty_like()
    for levels, amp in v.amplitudes.items():
        new_level = levels[e] + step
        if 0 <= new_level < v.d:
            out.add(levels[:e] + (new_level,) + levels[e + 1:], amp)
    return out


def ladder_power(direction: str, e: int, power: int, v: StateVector) -> StateVector:
    for _ in range(power):
        v = ladder_apply(direction, e, v)
    return v


def indicator_apply(e: int, k: int, v: StateVector) -> StateVector:
    """Projector I^k_e onto kets whose slot ``e`` sits at level ``k``."""
    if not 0 <= k < v.d:
        raise ValueError(f"Level {k} out of range for D={v.d}")
    _check_slot(e, v.n)
    out = v.empty_like()
    for levels, amp in v.amplitudes.items():
        if levels[e] == k:
            out.add(levels, amp)
    return out


def indicator_from_ladders(e: int, k: int, v: StateVector) -> StateVector:
    """I^k_e built as the ladder word (L+)^k (L-)^(D-1) (L+)^(D-1-k)."""
    d = v.d
    v = ladder_power("+", e, d - 1 - k, v)
    v = ladder_power("-", e, d - 1, v)
    return ladder_power("+", e, k, v)


@dataclass(frozen=True)
class SubgraphSpec:
    """A labeled subgraph g (edge list) at one-particle level ``level``."""

    edges: Tuple[Tuple[int, int], ...]
    level: int = 0

    def __post_init__(self):
        normalized = tuple(sorted((min(i, j), max(i, j)) for i, j in self.edges))
        if any(i == j for i, j in normalized):
            raise ValueError(f"Subgraph edges must join distinct vertices: {self.edges}")
        if len(set(normalized)) != len(normalized):
            raise ValueError(f"Subgraph edges must be distinct: {self.edges}")
        object.__setattr__(self, "edges", normalized)

    def slots(self, n: int) -> Tuple[int, ...]:
        return tuple(edge_index(i, j, n) for i, j in self.edges)


def subgraph_indicator(g: SubgraphSpec, v: StateVector) -> StateVector:
    """Product of edge indicators over the edges of ``g``."""
    for e in g.slots(v.n):
        v = indicator_apply(e, g.level, v)
    return v


def edge_number(ket: BasisKet, k: int) -> int:
    """Eigenvalue n_k of the edge occupation operator N^k."""
    return sum(1 for level in ket.levels if level == k)


@lru_cache(maxsize=None)
def _labeled_copies(n: int, edges: Tuple[Tuple[int, int], ...]) -> Tuple[frozenset, ...]:
    if n > 7:
        raise SizeGuardError(f"Subgraph copy enumeration refused for n={n} > 7")
    images = set()
    for pi in itertools.permutations(range(n)):
        images.add(frozenset(edge_index(pi[i], pi[j], n) for i, j in edges))
    return tuple(sorted(images, key=sorted))


def subgraph_number(ket: BasisKet, g: SubgraphSpec, k: Optional[int] = None) -> int:
    """Eigenvalue of N^k_g: distinct labeled copies of ``g`` inside G_k."""
    level = g.level if k is None else k
    present = {e for e, lv in enumerate(ket.levels) if lv == level}
    return sum(1 for copy in _labeled_copies(ket.n, g.edges) if copy <= present)


def number_apply(k: int, v: StateVector, g: Optional[SubgraphSpec] = None) -> StateVector:
    """Apply N^k (or N^k_g when ``g`` is given); diagonal in the basis."""
    out = v.empty_like()
    for ket in v.kets():
        eig = edge_number(ket, k) if g is None else subgraph_number(ket, g, k)
        if eig:
            out.add(ket.levels, v.amplitudes[ket.levels] * eig)
    return out


# ---------------------------------------------------------------------------
# Permutation action and projections
# ---------------------------------------------------------------------------


def permute_ket(pi: Permutation, ket: BasisKet) -> Tuple[BasisKet, int]:
    """Relabel vertices, re-sort edge kets into slot order and report the phase.

    In the antisymmetric sector each edge ket whose labels come out reversed
    contributes -1, so the phase is (-1)^(inversions of π) = sgn(π).
    """
    if pi.n != ket.n:
        raise ValueError(f"Permutation of size {pi.n} cannot act on n={ket.n}")
    levels = [0] * len(ket.levels)
    reversed_pairs = 0
    for (i, j), level in zip(edge_pairs(ket.n), ket.levels):
        a, b = pi(i), pi(j)
        if a > b:
            reversed_pairs += 1
        levels[edge_index(a, b, ket.n)] = level
    phase = -1 if ket.sector is Sector.ANTISYMMETRIC and reversed_pairs % 2 else 1
    return BasisKet(ket.n, ket.d, tuple(levels), ket.sector), phase


def permute(pi: Permutation, v: StateVector) -> StateVector:
    out = v.empty_like()
    for ket in v.kets():
        image, phase = permute_ket(pi, ket)
        out.add(image.levels, v.amplitudes[ket.levels] * phase)
    return out


def _project(v: StateVector, signed: bool) -> StateVector:
    if v.n > MAX_SYMMETRIZE_N:
        raise SizeGuardError(f"Projection over S_{v.n} refused (limit n <= {MAX_SYMMETRIZE_N})")
    weight = Fraction(1, math.factorial(v.n))
    out = v.empty_like()
    for pi in all_permutations(v.n):
        coeff = weight * (pi.sign() if signed else 1)
        for ket in v.kets():
            image, phase = permute_ket(pi, ket)
            out.add(image.levels, v.amplitudes[ket.levels] * coeff * phase)
    return out


def symmetrize(v: StateVector) -> StateVector:
    """S = (1/N!) Σ_π π."""
    return _project(v, signed=False)


def antisymmetrize(v: StateVector) -> StateVector:
    """A = (1/N!) Σ_π sgn(π) π."""
    return _project(v, signed=True)


VertexObservable = Callable[[BasisKet, int, int], Fraction]


def vertex_degree(ket: BasisKet, vertex: int, k: int) -> Fraction:
    """deg^k_i: edges at level k incident to ``vertex``."""
    count = 0
    for (i, j), level in zip(edge_pairs(ket.n), ket.levels):
        if level == k and vertex in (i, j):
            count += 1
    return Fraction(count)


class ProjectedVertexOperator:
    """A O_i A for a diagonal per-vertex observable O_i.

    Conjugating by every π sends O_i to O_π(i), so the projection is the
    average over vertices (1/N!) Σ_π O_π(i) = (1/N) Σ_i O_i.
    """

    def __init__(self, op: VertexObservable, k: int, vertex: int = 0):
        self._op = op
        self._k = k
        self._vertex = vertex

    def eigenvalue(self, ket: BasisKet) -> Fraction:
        if ket.n > MAX_SYMMETRIZE_N:
            raise SizeGuardError(f"Projection over S_{ket.n} refused (limit n <= {MAX_SYMMETRIZE_N})")
        total = Fraction(0)
        for pi in all_permutations(ket.n):
            total += self._op(ket, pi(self._vertex), self._k)
        return total / math.factorial(ket.n)

    def apply(self, v: StateVector) -> StateVector:
        out = v.empty_like()
        for ket in v.kets():
            out.add(ket.levels, v.amplitudes[ket.levels] * self.eigenvalue(ket))
        return out

    def eigenvalue_on(self, v: StateVector) -> Fraction:
        """Eigenvalue of ``v``; raises if ``v`` is not an eigenvector."""
        if v.is_zero():
            raise ValueError("Zero vector has no eigenvalue")
        values = {self.eigenvalue(ket) for ket in v.kets()}
        if len(values) != 1:
            raise ValueError(f"Vector is not an eigenvector: eigenvalues {sorted(values)}")
        return values.pop()


def project_vertex_operator(op: VertexObservable, k: int) -> ProjectedVertexOperator:
    return ProjectedVertexOperator(op, k)


# ---------------------------------------------------------------------------
# Basis census
# ---------------------------------------------------------------------------


def basis_size(n: int, d: int) -> int:
    size = d ** slot_count(n)
    if size > MAX_BASIS_SIZE:
        raise SizeGuardError(f"Basis of size {d}^{slot_count(n)} exceeds the 2^24 guard")
    return size


def basis(n: int, d: int, sector: Sector = Sector.ANTISYMMETRIC) -> Iterator[BasisKet]:
    basis_size(n, d)
    for levels in itertools.product(range(d), repeat=slot_count(n)):
        yield BasisKet(n, d, levels, sector)


@lru_cache(maxsize=None)
def stirling2(m: int, k: int) -> int:
    if m == k:
        return 1
    if k == 0 or k > m:
        return 0
    return k * stirling2(m - 1, k) + stirling2(m - 1, k - 1)


def occupation_census(n: int, d: int) -> Dict[int, Tuple[int, int]]:
    """Kets grouped by number of non-empty occupation graphs.

    Returns ``{k': (enumerated count, (D)_k' * S(M, k'))}``; both columns sum to D^M.
    """
    m = slot_count(n)
    counts = {k: 0 for k in range(d + 1)}
    for ket in basis(n, d):
        counts[len(set(ket.levels))] += 1
    return {k: (counts[k], math.perm(d, k) * stirling2(m, k)) for k in range(d + 1)}


# ---------------------------------------------------------------------------
# Dense matrices for operator identities
# ---------------------------------------------------------------------------


def operator_matrix(apply: Callable[[StateVector], StateVector], n: int, d: int,
                    sector: Sector = Sector.ANTISYMMETRIC) -> np.ndarray:
    """Matrix of a linear map on the full basis, as an object array of Fractions."""
    kets = list(basis(n, d, sector))
    index = {ket.levels: idx for idx, ket in enumerate(kets)}
    mat = np.full((len(kets), len(kets)), Fraction(0), dtype=object)
    for col, ket in enumerate(kets):
        for levels, amp in apply(StateVector.of(ket)).amplitudes.items():
            mat[index[levels], col] = amp
    return mat
