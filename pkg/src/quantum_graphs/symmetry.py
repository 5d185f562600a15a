"""
Vertex relabelings, isomorphism testing and automorphism-group orders.

The automorphism order |Γ(G)| weights the unlabeled ensemble, so it is on the
Monte Carlo hot path. It is computed in two stages:

1. Twin collapse. Vertices with identical open (or closed) neighbourhoods and the
   same colour can be permuted freely, contributing a factorial each; they are
   contracted into one coloured vertex and the process repeats.
2. Individualization-refinement on the coloured quotient, from the equitable
   refinement of the colour partition. The group order is accumulated as
   |orbit of v| * |stabilizer of v| down the first path, with orbits closed
   under every automorphism found so far.

Orders are always computed on the level-1 graph; a graph and its complement
share the same automorphism group.
"""

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .graph_state import GraphState, SizeGuardError, edge_index, edge_pairs, slot_count

logger = logging.getLogger(__name__)

BRUTE_FORCE_LIMIT = 8

Cells = List[List[int]]


@dataclass(frozen=True)
class Permutation:
    """A bijection on 0..n-1; ``image[i]`` is the image of vertex i."""

    image: Tuple[int, ...]

    def __post_init__(self):
        image = tuple(self.image)
        object.__setattr__(self, "image", image)
        if sorted(image) != list(range(len(image))):
            raise ValueError(f"Not a permutation of 0..{len(image) - 1}: {image}")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_cycles(cls, n: int, *cycles: Sequence[int]) -> "Permutation":
        """Build from disjoint cycles, e.g. ``from_cycles(3, (0, 2))``."""
        image = list(range(n))
        for cycle in cycles:
            for a, b in zip(cycle, tuple(cycle[1:]) + (cycle[0],)):
                image[a] = b
        return cls(tuple(image))

    @property
    def n(self) -> int:
        return len(self.image)

    def __call__(self, i: int) -> int:
        return self.image[i]

    def compose(self, other: "Permutation") -> "Permutation":
        """``self ∘ other``: apply ``other`` first."""
        if other.n != self.n:
            raise ValueError(f"Size mismatch: {self.n} vs {other.n}")
        return Permutation(tuple(self.image[other.image[i]] for i in range(self.n)))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.image):
            inv[j] = i
        return Permutation(tuple(inv))

    def cycles(self) -> List[Tuple[int, ...]]:
        seen = set()
        result = []
        for start in range(self.n):
            if start in seen:
                continue
            cycle = [start]
            seen.add(start)
            nxt = self.image[start]
            while nxt != start:
                cycle.append(nxt)
                seen.add(nxt)
                nxt = self.image[nxt]
            result.append(tuple(cycle))
        return result

    def cycle_type(self) -> "CycleType":
        return CycleType.of(len(c) for c in self.cycles())

    def sign(self) -> int:
        odd = sum(len(c) - 1 for c in self.cycles()) % 2
        return -1 if odd else 1

    def inversions(self) -> int:
        return sum(1 for i, j in itertools.combinations(range(self.n), 2) if self.image[i] > self.image[j])


@dataclass(frozen=True)
class CycleType:
    """Integer partition of n given as cycle lengths in non-increasing order."""

    parts: Tuple[int, ...]

    def __post_init__(self):
        parts = tuple(sorted(self.parts, reverse=True))
        object.__setattr__(self, "parts", parts)
        if any(p < 1 for p in parts):
            raise ValueError(f"Cycle lengths must be >= 1: {parts}")

    @classmethod
    def of(cls, lengths: Iterable[int]) -> "CycleType":
        return cls(tuple(lengths))

    @property
    def n(self) -> int:
        return sum(self.parts)

    def multiplicities(self) -> Dict[int, int]:
        return dict(Counter(self.parts))

    def class_size(self) -> int:
        """Number of permutations of S_n with this cycle type."""
        denom = 1
        for k, m in self.multiplicities().items():
            denom *= k**m * math.factorial(m)
        return math.factorial(self.n) // denom

    def representative(self) -> Permutation:
        cycles = []
        start = 0
        for length in self.parts:
            cycles.append(tuple(range(start, start + length)))
            start += length
        return Permutation.from_cycles(self.n, *cycles)


def all_permutations(n: int) -> Iterator[Permutation]:
    for image in itertools.permutations(range(n)):
        yield Permutation(image)


def apply_permutation(state: GraphState, pi: Permutation) -> GraphState:
    """Relabel vertices: edge {i,j} at level k maps to {π(i),π(j)} at level k."""
    if pi.n != state.n:
        raise ValueError(f"Permutation of size {pi.n} cannot act on a state with n={state.n}")
    bits = 0
    image = pi.image
    for i, j in state.edges(1):
        bits |= 1 << edge_index(image[i], image[j], state.n)
    return GraphState(state.n, bits)


# ---------------------------------------------------------------------------
# Partition refinement
# ---------------------------------------------------------------------------


def _refine(adj: Sequence[int], cells: Cells) -> Cells:
    """Coarsest equitable refinement, splitting cells by neighbour counts.

    Sub-cells are ordered by count and the scan restarts after every split, so
    the result is equivariant under relabeling.
    """
    cells = [list(c) for c in cells]
    while True:
        split = False
        for splitter in cells:
            mask = 0
            for v in splitter:
                mask |= 1 << v
            refined: Cells = []
            for cell in cells:
                if len(cell) == 1:
                    refined.append(cell)
                    continue
                counts = [(adj[v] & mask).bit_count() for v in cell]
                if min(counts) == max(counts):
                    refined.append(cell)
                    continue
                groups: Dict[int, List[int]] = {}
                for v, c in zip(cell, counts):
                    groups.setdefault(c, []).append(v)
                refined.extend(groups[c] for c in sorted(groups))
                split = True
            if split:
                cells = refined
                break
        if not split:
            return cells


def _target_cell(cells: Cells) -> int:
    """Index of the first smallest non-singleton cell."""
    best = -1
    for idx, cell in enumerate(cells):
        if len(cell) > 1 and (best < 0 or len(cell) < len(cells[best])):
            best = idx
    return best


def _individualize(cells: Cells, t: int, v: int) -> Cells:
    rest = [u for u in cells[t] if u != v]
    return cells[:t] + [[v], rest] + cells[t + 1:]


def _is_discrete(cells: Cells) -> bool:
    return all(len(c) == 1 for c in cells)


def _orbit_closure(seeds: Iterable[int], generators: Sequence[Sequence[int]]) -> set:
    orbit = set(seeds)
    frontier = list(orbit)
    while frontier:
        x = frontier.pop()
        for gamma in generators:
            y = gamma[x]
            if y not in orbit:
                orbit.add(y)
                frontier.append(y)
    return orbit


def _preserves(adj: Sequence[int], gamma: Sequence[int], colour: Sequence[int]) -> bool:
    for x, gx in enumerate(gamma):
        if colour[x] != colour[gx]:
            return False
        mapped = 0
        nbrs = adj[x]
        while nbrs:
            low = nbrs & -nbrs
            mapped |= 1 << gamma[low.bit_length() - 1]
            nbrs ^= low
        if mapped != adj[gx]:
            return False
    return True


def _find_isomorphism(adj: Sequence[int], p: Cells, q: Cells, colour: Sequence[int]) -> Optional[List[int]]:
    """An automorphism mapping partition ``p`` onto ``q`` cell by cell, if any."""
    p = _refine(adj, p)
    q = _refine(adj, q)
    if [len(c) for c in p] != [len(c) for c in q]:
        return None
    if _is_discrete(p):
        gamma = [0] * len(adj)
        for pc, qc in zip(p, q):
            gamma[pc[0]] = qc[0]
        return gamma if _preserves(adj, gamma, colour) else None
    t = _target_cell(p)
    x = p[t][0]
    for y in q[t]:
        found = _find_isomorphism(adj, _individualize(p, t, x), _individualize(q, t, y), colour)
        if found is not None:
            return found
    return None


def _group_order(adj: Sequence[int], cells: Cells) -> Tuple[int, List[List[int]]]:
    """Order of the automorphism group of ``adj`` preserving ``cells``, with generators found."""
    cells = _refine(adj, cells)
    if _is_discrete(cells):
        return 1, []
    colour = [0] * len(adj)
    for idx, cell in enumerate(cells):
        for v in cell:
            colour[v] = idx
    t = _target_cell(cells)
    v = cells[t][0]
    base = _individualize(cells, t, v)
    stabilizer_order, generators = _group_order(adj, base)
    orbit = _orbit_closure([v], generators)
    for w in cells[t]:
        if w in orbit:
            continue
        gamma = _find_isomorphism(adj, base, _individualize(cells, t, w), colour)
        if gamma is not None:
            generators.append(gamma)
            orbit = _orbit_closure(orbit, generators)
    return len(orbit) * stabilizer_order, generators


def _collapse_twins(adj: List[int], colours: List[int]) -> Tuple[List[int], List[int], int]:
    """Contract same-coloured twin classes; returns quotient adjacency, colours and factor."""
    n = len(adj)
    open_groups: Dict[Tuple[int, int], List[int]] = {}
    closed_groups: Dict[Tuple[int, int], List[int]] = {}
    for v in range(n):
        open_groups.setdefault((colours[v], adj[v]), []).append(v)
        closed_groups.setdefault((colours[v], adj[v] | (1 << v)), []).append(v)

    class_of = [-1] * n
    classes: List[Tuple[List[int], int]] = []
    for kind, groups in ((1, open_groups), (2, closed_groups)):
        for members in groups.values():
            if len(members) > 1 and class_of[members[0]] < 0:
                for v in members:
                    class_of[v] = len(classes)
                classes.append((members, kind))
    for v in range(n):
        if class_of[v] < 0:
            class_of[v] = len(classes)
            classes.append(([v], 0))

    factor = 1
    for members, _ in classes:
        factor *= math.factorial(len(members))
    if len(classes) == n:
        return adj, colours, 1

    reps = [members[0] for members, _ in classes]
    quotient = [0] * len(classes)
    for a, rep in enumerate(reps):
        for b, other in enumerate(reps):
            if a != b and (adj[rep] >> other) & 1:
                quotient[a] |= 1 << b
    keys = [(colours[members[0]], len(members), kind) for members, kind in classes]
    ranking = {key: idx for idx, key in enumerate(sorted(set(keys)))}
    return quotient, [ranking[k] for k in keys], factor


def automorphism_count_from_adjacency(adj: Sequence[int], colours: Optional[Sequence[int]] = None) -> int:
    """|Aut| of a (vertex-coloured) graph given by neighbour bitmasks."""
    adj = list(adj)
    colours = list(colours) if colours is not None else [0] * len(adj)
    factor = 1
    while True:
        adj, colours, f = _collapse_twins(adj, colours)
        if f == 1:
            break
        factor *= f
    cells: Dict[int, List[int]] = {}
    for v, c in enumerate(colours):
        cells.setdefault(c, []).append(v)
    order, _ = _group_order(adj, [cells[c] for c in sorted(cells)])
    return factor * order


def automorphism_count(state: GraphState, level: int = 1) -> int:
    """Order of Γ(G) = {π : π(G) = G}."""
    return automorphism_count_from_adjacency(state.adjacency_masks(level))


def automorphism_count_bruteforce(state: GraphState) -> int:
    """Literal count of fixing permutations over all of S_n (test oracle)."""
    if state.n > BRUTE_FORCE_LIMIT:
        raise SizeGuardError(f"Brute-force automorphism count refused for n={state.n} > {BRUTE_FORCE_LIMIT}")
    return sum(1 for pi in all_permutations(state.n) if apply_permutation(state, pi) == state)


def labelings_count(state: GraphState) -> int:
    """Number of distinct labelings n!/|Γ(G)|."""
    return math.factorial(state.n) // automorphism_count(state)


# ---------------------------------------------------------------------------
# Canonical form
# ---------------------------------------------------------------------------


def _relabeled_word(adj: Sequence[int], order: Sequence[int], n: int) -> int:
    """Bit word of the graph relabeled so that ``order[k]`` becomes vertex k.

    Slot 0 is the most significant bit, so integer order equals lexicographic
    order of the slot string.
    """
    m = slot_count(n)
    word = 0
    for e, (a, b) in enumerate(edge_pairs(n)):
        if (adj[order[a]] >> order[b]) & 1:
            word |= 1 << (m - 1 - e)
    return word


def canonical_form(state: GraphState) -> GraphState:
    """Lexicographically least slot string over the pruned relabeling search tree."""
    n = state.n
    m = slot_count(n)
    adj = state.adjacency_masks(1)
    leaves: Dict[int, List[int]] = {}
    generators: List[List[int]] = []
    best: Optional[int] = None

    def search(cells: Cells, prefix: List[int]) -> None:
        nonlocal best
        cells = _refine(adj, cells)
        if _is_discrete(cells):
            order = [c[0] for c in cells]
            word = _relabeled_word(adj, order, n)
            seen = leaves.get(word)
            if seen is None:
                leaves[word] = order
            else:
                gamma = [0] * n
                for a, b in zip(seen, order):
                    gamma[a] = b
                generators.append(gamma)
            if best is None or word < best:
                best = word
            return
        t = _target_cell(cells)
        explored: List[int] = []
        for y in list(cells[t]):
            if explored:
                fixing = [g for g in generators if all(g[p] == p for p in prefix)]
                if y in _orbit_closure(explored, fixing):
                    continue
            search(_individualize(cells, t, y), prefix + [y])
            explored.append(y)

    search([list(range(n))], [])
    word = best
    bits = 0
    for e in range(m):
        if (word >> (m - 1 - e)) & 1:
            bits |= 1 << e
    return GraphState(n, bits)


def are_isomorphic(g: GraphState, h: GraphState) -> bool:
    if g.n != h.n:
        raise ValueError(f"Isomorphism test needs equal vertex counts, got {g.n} and {h.n}")
    if g.n1 != h.n1 or _degree_key(g) != _degree_key(h):
        return False
    return canonical_form(g) == canonical_form(h)


def _degree_key(state: GraphState) -> Tuple[int, ...]:
    return tuple(sorted(mask.bit_count() for mask in state.adjacency_masks(1)))


# ---------------------------------------------------------------------------
# Isomorphism classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IsomorphismClass:
    representative: GraphState
    automorphisms: int

    @property
    def labelings(self) -> int:
        return math.factorial(self.representative.n) // self.automorphisms


@lru_cache(maxsize=None)
def isomorphism_classes(n: int) -> Tuple[IsomorphismClass, ...]:
    """Canonical representatives of all graphs on ``n`` vertices, sorted by slot string.

    Built by vertex augmentation: every class on n-1 vertices is extended by a
    new vertex joined to each subset of the old ones.
    """
    if n > 10:
        raise SizeGuardError(f"Isomorphism-class generation refused for n={n} > 10")
    if n == 1:
        return (IsomorphismClass(GraphState(1, 0), 1),)
    found: Dict[int, GraphState] = {}
    for cls in isomorphism_classes(n - 1):
        old_edges = cls.representative.edges(1)
        for subset in range(1 << (n - 1)):
            edges = old_edges + [(v, n - 1) for v in range(n - 1) if (subset >> v) & 1]
            canon = canonical_form(GraphState.from_edges(n, edges))
            found.setdefault(canon.bits, canon)
    ordered = sorted(found.values(), key=lambda s: _relabeled_word(s.adjacency_masks(1), list(range(n)), n))
    logger.debug(f"Generated {len(ordered)} isomorphism classes for n={n}")
    return tuple(IsomorphismClass(s, automorphism_count(s)) for s in ordered)
