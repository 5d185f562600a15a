"""
Edge-indexed quantum graph basis states for D=2.

A state on ``n`` vertices assigns a one-particle level (0 or 1) to each of the
M = n(n-1)/2 edge slots of the complete graph. Slot ``e`` holds the unordered
vertex pair {i, j}, i < j, ranked in lexicographic order. Bit ``e`` of
``GraphState.bits`` is the level of that slot, so the free ground state
|K_N, {}> is the all-zero word.

Vertices are 0-based throughout; the text format documents this too.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)


class SizeGuardError(ValueError):
    """Raised when a request exceeds a cost guard."""


class GraphParseError(ValueError):
    """Raised for malformed graph text; ``offset`` is the first bad byte."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def slot_count(n: int) -> int:
    return n * (n - 1) // 2


def edge_index(i: int, j: int, n: int) -> int:
    """
    Lexicographic rank of the pair {i, j} among the edge slots of K_n.

    Args:
        i: First vertex (0-based)
        j: Second vertex (0-based), must differ from i
        n: Vertex count

    Returns:
        Slot index in 0..M-1
    """
    if i == j:
        raise ValueError(f"Self-loop {{{i},{j}}} has no edge slot")
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"Vertex out of range for n={n}: ({i}, {j})")
    if i > j:
        i, j = j, i
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


def edge_pair(e: int, n: int) -> Tuple[int, int]:
    """Inverse of ``edge_index``: the pair (i, j), i < j, stored in slot ``e``."""
    if not 0 <= e < slot_count(n):
        raise ValueError(f"Edge slot {e} out of range for n={n}")
    return edge_pairs(n)[e]


@lru_cache(maxsize=None)
def edge_pairs(n: int) -> Tuple[Tuple[int, int], ...]:
    """All slot pairs of K_n in slot order."""
    return tuple((i, j) for i in range(n) for j in range(i + 1, n))


@lru_cache(maxsize=None)
def incident_masks(n: int) -> Tuple[int, ...]:
    """Per-vertex bitmask over edge slots touching that vertex."""
    masks = [0] * n
    for e, (i, j) in enumerate(edge_pairs(n)):
        masks[i] |= 1 << e
        masks[j] |= 1 << e
    return tuple(masks)


class UnionFind:
    """Disjoint sets over 0..n-1 with union by size and path halving."""

    def __init__(self, n: int):
        self._parent = list(range(n))
        self._size = [1] * n

    def find(self, x: int) -> int:
        parent = self._parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self._size[ra] < self._size[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        self._size[ra] += self._size[rb]
        return ra

    def component_size(self, x: int) -> int:
        return self._size[self.find(x)]

    def largest(self) -> int:
        return max(self._size[r] for r in range(len(self._parent)) if self._parent[r] == r)


@dataclass(frozen=True)
class GraphState:
    """Occupation levels of the edge slots of K_n (quantum graph |G0, G1>)."""

    n: int
    bits: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"Vertex count must be >= 1, got {self.n}")
        if self.bits < 0 or self.bits >> self.m:
            raise ValueError(f"Bit word does not fit {self.m} edge slots")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]]) -> "GraphState":
        """State whose level-1 graph has exactly the given edges."""
        bits = 0
        for i, j in edges:
            bits |= 1 << edge_index(i, j, n)
        return cls(n, bits)

    @classmethod
    def complete(cls, n: int) -> "GraphState":
        """All slots at level 1."""
        return cls(n, (1 << slot_count(n)) - 1)

    @property
    def m(self) -> int:
        return slot_count(self.n)

    @property
    def n1(self) -> int:
        return self.bits.bit_count()

    @property
    def n0(self) -> int:
        return self.m - self.n1

    def level(self, e: int) -> int:
        return (self.bits >> e) & 1

    def level_word(self, level: int) -> int:
        """Bit word of the level-``level`` subgraph."""
        _check_level(level)
        return self.bits if level == 1 else self.complement().bits

    def edges(self, level: int = 1) -> List[Tuple[int, int]]:
        word = self.level_word(level)
        return [pair for e, pair in enumerate(edge_pairs(self.n)) if (word >> e) & 1]

    def complement(self) -> "GraphState":
        return GraphState(self.n, self.bits ^ ((1 << self.m) - 1))

    def adjacency_masks(self, level: int = 1) -> List[int]:
        """Per-vertex neighbour bitmasks of the level-``level`` graph."""
        adj = [0] * self.n
        for i, j in self.edges(level):
            adj[i] |= 1 << j
            adj[j] |= 1 << i
        return adj

    def adjacency_matrix(self, level: int = 1) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for i, j in self.edges(level):
            a[i, j] = a[j, i] = 1
        return a


def _check_level(level: int) -> None:
    if level not in (0, 1):
        raise ValueError(f"Level must be 0 or 1 for quantum graphs, got {level}")


def degrees(state: GraphState, level: int) -> Tuple[int, ...]:
    """Degree sequence d^k of the level-``level`` graph."""
    word = state.level_word(level)
    return tuple((word & mask).bit_count() for mask in incident_masks(state.n))


def angle_count(state: GraphState, level: int) -> int:
    """Number of length-2 paths b^k in the level-``level`` graph."""
    return sum(d * (d - 1) // 2 for d in degrees(state, level))


def largest_component_fraction(state: GraphState, level: int = 1) -> float:
    """Fraction s of vertices in the largest connected component of G_level."""
    uf = UnionFind(state.n)
    for i, j in state.edges(level):
        uf.union(i, j)
    return uf.largest() / state.n


def flip_edge(state: GraphState, e: int) -> GraphState:
    if not 0 <= e < state.m:
        raise ValueError(f"Edge slot {e} out of range for n={state.n} (M={state.m})")
    return GraphState(state.n, state.bits ^ (1 << e))


def serialize(state: GraphState) -> str:
    """Fixed-width text form ``n=<int>;<M chars of 0/1 in slot order>``."""
    return f"n={state.n};" + "".join(str((state.bits >> e) & 1) for e in range(state.m))


def parse(text: str) -> GraphState:
    """Inverse of ``serialize``; errors name the byte offset of the problem."""
    if not text.startswith("n="):
        bad = next((k for k, (got, want) in enumerate(zip(text, "n=")) if got != want), len(text))
        raise GraphParseError("Malformed header, expected 'n=<int>;'", bad)
    end = 2
    while end < len(text) and text[end].isdigit():
        end += 1
    if end == 2 or end >= len(text) or text[end] != ";":
        raise GraphParseError("Malformed header, expected 'n=<int>;'", end)

    n = int(text[2:end])
    if n < 1:
        raise GraphParseError(f"Vertex count must be >= 1, got {n}", 2)
    body_start = end + 1
    body = text[body_start:]
    bits = 0
    for e, ch in enumerate(body):
        if ch not in "01":
            raise GraphParseError(f"Non-binary character {ch!r}", body_start + e)
        if ch == "1":
            bits |= 1 << e
    m = slot_count(n)
    if len(body) != m:
        raise GraphParseError(
            f"Length mismatch: n={n} needs {m} slot characters, got {len(body)}",
            body_start + min(len(body), m),
        )
    return GraphState(n, bits)


def two_path_count(state: GraphState, level: int) -> int:
    """Paths of length 2 counted directly over vertex triples (oracle for ``angle_count``)."""
    adj = state.adjacency_masks(level)
    count = 0
    for centre in range(state.n):
        for a in range(state.n):
            for b in range(a + 1, state.n):
                if centre not in (a, b) and (adj[centre] >> a) & 1 and (adj[centre] >> b) & 1:
                    count += 1
    return count


def states(n: int) -> Iterable[GraphState]:
    """Every labeled state on ``n`` vertices in bit-word order."""
    if slot_count(n) > 24:
        raise SizeGuardError(f"Refusing to enumerate 2^{slot_count(n)} states (limit 2^24)")
    for bits in range(1 << slot_count(n)):
        yield GraphState(n, bits)


def degree_multiset(state: GraphState, level: int) -> Sequence[int]:
    return tuple(sorted(degrees(state, level)))
