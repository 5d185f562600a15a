"""
Exact thermodynamics.

Three independent routes:
- closed forms for the labeled free model (independent edges)
- exhaustive Boltzmann sums over the isomorphism-class table (n <= 7, or 10 with ``long_run``)
- Pólya enumeration through the cycle index of the pair group, for the unlabeled free model at any n
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np
from scipy.special import expit, logsumexp

from .graph_state import SizeGuardError, angle_count, edge_pairs, largest_component_fraction, slot_count
from .hamiltonian import Ensemble, ModelKind, ModelParams, energy_from_counts, flip_delta
from .hilbert import SubgraphSpec
from .symmetry import isomorphism_classes

logger = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 7
LONG_EXHAUSTIVE_LIMIT = 10
GRAY_CODE_LIMIT = 7
POLYA_LIMIT = 40


@dataclass(frozen=True)
class ThermoPoint:
    """Per-vertex free energy, internal energy and specific heat at one β."""

    beta: float
    f: float
    u: float
    c: float


@dataclass(frozen=True)
class ExactObservables:
    point: ThermoPoint
    s1: float
    chi_s1: float
    m: float
    chi_m: float

    def as_row(self, n: int, ensemble: Ensemble) -> Dict[str, float]:
        return {
            "n": n,
            "beta": self.point.beta,
            "ensemble": Ensemble(ensemble).value,
            "f": self.point.f,
            "u": self.point.u,
            "c": self.point.c,
            "s1": self.s1,
            "chi_s1": self.chi_s1,
            "m": self.m,
            "chi_m": self.chi_m,
        }


@dataclass(frozen=True)
class BoltzmannSums:
    """Normalized moments of one exhaustive Boltzmann sum."""

    n: int
    beta: float
    ensemble: Ensemble
    log_z: float
    mean_e: float
    mean_e2: float
    mean_s1: float
    mean_s1_sq: float
    mean_n1: float
    mean_n1_sq: float


@dataclass(frozen=True)
class EdgePolynomial:
    """Coefficients a_m of Σ_m a_m x^m, m = number of edges at one level."""

    coefficients: Tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.coefficients)

    def __getitem__(self, m: int) -> int:
        return self.coefficients[m]

    def __len__(self) -> int:
        return len(self.coefficients)


def _free_energy(log_z: float, beta: float, n: int) -> float:
    if beta == 0:
        return -math.inf
    return -log_z / (beta * n)


def _require_free(p: ModelParams) -> None:
    if p.kind is not ModelKind.FREE:
        raise ValueError(f"Closed forms need the free model, got {p.kind.value}")


# ---------------------------------------------------------------------------
# Labeled free model: closed forms
# ---------------------------------------------------------------------------


def er_edge_probability(beta: float, p: ModelParams) -> float:
    """Probability that an edge sits at level 0: 1/(1 + e^{-βJΔE})."""
    _require_free(p)
    return float(expit(beta * p.J * p.delta_e))


def subgraph_probability(beta: float, p: ModelParams, g: SubgraphSpec) -> float:
    """⟨I^0_g⟩ in the labeled free model; ``g`` at level 1 uses the complementary probability."""
    p0 = er_edge_probability(beta, p)
    base = p0 if g.level == 0 else 1.0 - p0
    return base ** len(g.edges)


def labeled_free_thermo(beta: float, p: ModelParams) -> ThermoPoint:
    """
    Closed-form f, u, c for the labeled free model.

    Every slot is an independent two-level system with energies J E0 and J E1,
    so log Z = M log(e^{-βJE0} + e^{-βJE1}).
    """
    _require_free(p)
    m = slot_count(p.n)
    log_z = m * float(np.logaddexp(-beta * p.J * p.E0, -beta * p.J * p.E1))
    p0 = er_edge_probability(beta, p)
    p1 = 1.0 - p0
    u = m / p.n * p.J * (p.E0 * p0 + p.E1 * p1)
    c = beta**2 * m / p.n * (p.J * p.delta_e) ** 2 * p0 * p1
    return ThermoPoint(beta=beta, f=_free_energy(log_z, beta, p.n), u=u, c=c)


def labeled_free_observables(beta: float, p: ModelParams) -> ExactObservables:
    """Closed forms plus m = p₁ and χ_m = β p₀ p₁; s₁ has no closed form and is NaN."""
    p0 = er_edge_probability(beta, p)
    return ExactObservables(
        point=labeled_free_thermo(beta, p),
        s1=math.nan,
        chi_s1=math.nan,
        m=1.0 - p0,
        chi_m=beta * p0 * (1.0 - p0),
    )


# ---------------------------------------------------------------------------
# Exhaustive sums over the class table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassTable:
    """Per-class structural data for every isomorphism class on n vertices."""

    n: int
    n1: np.ndarray
    b0: np.ndarray
    b1: np.ndarray
    s1: np.ndarray
    log_labelings: np.ndarray


@lru_cache(maxsize=None)
def class_table(n: int) -> ClassTable:
    classes = isomorphism_classes(n)
    return ClassTable(
        n=n,
        n1=np.array([c.representative.n1 for c in classes], dtype=np.float64),
        b0=np.array([angle_count(c.representative, 0) for c in classes], dtype=np.float64),
        b1=np.array([angle_count(c.representative, 1) for c in classes], dtype=np.float64),
        s1=np.array([largest_component_fraction(c.representative) for c in classes], dtype=np.float64),
        log_labelings=np.array([math.log(c.labelings) for c in classes], dtype=np.float64),
    )


def _check_exhaustive(n: int, long_run: bool) -> None:
    limit = LONG_EXHAUSTIVE_LIMIT if long_run else EXHAUSTIVE_LIMIT
    if n > limit:
        raise SizeGuardError(f"Exhaustive sum refused for n={n} > {limit}; pass --long to allow up to n=10")
    if n > EXHAUSTIVE_LIMIT:
        logger.warning(f"Exhaustive sum at n={n} unlocked by --long; this is slow")


def exhaustive_partition(beta: float, p: ModelParams, ensemble: Ensemble, long_run: bool = False) -> BoltzmannSums:
    """
    Boltzmann moments summed exactly over all states.

    Classes are weighted by their labeling count for the labeled ensemble and by
    1 for the unlabeled one, which equals Σ_{G_l} (|Γ|/n!) e^{-βE}. Accumulation
    uses a max-shifted log-sum-exp in fixed class order.
    """
    ensemble = Ensemble(ensemble)
    _check_exhaustive(p.n, long_run)
    table = class_table(p.n)
    m = slot_count(p.n)
    energies = energy_from_counts(p, m - table.n1, table.n1, table.b0, table.b1)
    log_w = -beta * energies
    if ensemble is Ensemble.LABELED:
        log_w = log_w + table.log_labelings
    log_z = float(logsumexp(log_w))
    prob = np.exp(log_w - log_z)
    return BoltzmannSums(
        n=p.n,
        beta=beta,
        ensemble=ensemble,
        log_z=log_z,
        mean_e=float(prob @ energies),
        mean_e2=float(prob @ energies**2),
        mean_s1=float(prob @ table.s1),
        mean_s1_sq=float(prob @ table.s1**2),
        mean_n1=float(prob @ table.n1),
        mean_n1_sq=float(prob @ table.n1**2),
    )


def _variance(mean_sq: float, mean: float) -> float:
    if math.isnan(mean):
        return math.nan
    return max(mean_sq - mean**2, 0.0)


def observables_from_sums(sums: BoltzmannSums) -> ExactObservables:
    n, beta = sums.n, sums.beta
    m = slot_count(n)
    var_e = _variance(sums.mean_e2, sums.mean_e)
    var_s1 = _variance(sums.mean_s1_sq, sums.mean_s1)
    var_m = _variance(sums.mean_n1_sq, sums.mean_n1) / m**2
    point = ThermoPoint(beta=beta, f=_free_energy(sums.log_z, beta, n), u=sums.mean_e / n, c=beta**2 * var_e / n)
    return ExactObservables(
        point=point,
        s1=sums.mean_s1,
        chi_s1=beta * n * var_s1,
        m=sums.mean_n1 / m,
        chi_m=beta * m * var_m,
    )


def exact_observables(beta: float, p: ModelParams, ensemble: Ensemble, long_run: bool = False) -> ExactObservables:
    return observables_from_sums(exhaustive_partition(beta, p, ensemble, long_run))


def gray_code_labeled_sums(beta: float, p: ModelParams) -> BoltzmannSums:
    """
    Labeled sums by walking all 2^M states in Gray-code order.

    Each step flips one slot and updates the energy with ``flip_delta``, so the
    walk never re-evaluates a full energy. s₁ is not tracked on this path; its
    moments are reported as NaN.
    """
    if p.n > GRAY_CODE_LIMIT:
        raise SizeGuardError(f"Gray-code walk refused for n={p.n} > {GRAY_CODE_LIMIT}")
    n, m = p.n, slot_count(p.n)
    pairs = edge_pairs(n)
    size = 1 << m
    energies = np.empty(size, dtype=np.float64)
    n1s = np.empty(size, dtype=np.float64)

    d1 = [0] * n
    bits = 0
    current = energy_from_counts(p, m, 0, n * math.comb(n - 1, 2), 0)
    n1 = 0
    energies[0], n1s[0] = current, 0
    for step in range(1, size):
        e = (step & -step).bit_length() - 1
        i, j = pairs[e]
        level = (bits >> e) & 1
        current += flip_delta(p, level, d1[i], d1[j])
        change = 1 if level == 0 else -1
        d1[i] += change
        d1[j] += change
        n1 += change
        bits ^= 1 << e
        energies[step], n1s[step] = current, n1

    log_w = -beta * energies
    log_z = float(logsumexp(log_w))
    prob = np.exp(log_w - log_z)
    return BoltzmannSums(
        n=n,
        beta=beta,
        ensemble=Ensemble.LABELED,
        log_z=log_z,
        mean_e=float(prob @ energies),
        mean_e2=float(prob @ energies**2),
        mean_s1=math.nan,
        mean_s1_sq=math.nan,
        mean_n1=float(prob @ n1s),
        mean_n1_sq=float(prob @ n1s**2),
    )


# ---------------------------------------------------------------------------
# Pólya enumeration
# ---------------------------------------------------------------------------


def integer_partitions(n: int) -> Iterator[Tuple[int, ...]]:
    """Partitions of ``n`` as non-increasing tuples, in reverse lexicographic order."""
    if n == 0:
        yield ()
        return

    def extend(remaining: int, largest: int, prefix: List[int]) -> Iterator[Tuple[int, ...]]:
        if remaining == 0:
            yield tuple(prefix)
            return
        for part in range(min(remaining, largest), 0, -1):
            prefix.append(part)
            yield from extend(remaining - part, part, prefix)
            prefix.pop()

    yield from extend(n, n, [])


def class_size(partition: Sequence[int]) -> int:
    """Size n!/∏ k^{m_k} m_k! of the conjugacy class with this cycle type."""
    n = sum(partition)
    denominator = 1
    for k, mult in Counter(partition).items():
        denominator *= k**mult * math.factorial(mult)
    return math.factorial(n) // denominator


def pair_cycle_type(partition: Sequence[int]) -> Dict[int, int]:
    """
    Cycle type induced on unordered vertex pairs by a permutation of the given type.

    Within one cycle of length a: (a-1)/2 cycles of length a for odd a, and
    a/2 - 1 cycles of length a plus one of length a/2 for even a. Between
    cycles of lengths a and b: gcd(a, b) cycles of length lcm(a, b).
    """
    counts: Counter = Counter()
    parts = list(partition)
    for a in parts:
        if a % 2:
            counts[a] += (a - 1) // 2
        else:
            counts[a] += a // 2 - 1
            counts[a // 2] += 1
    for x in range(len(parts)):
        for y in range(x + 1, len(parts)):
            a, b = parts[x], parts[y]
            counts[math.lcm(a, b)] += math.gcd(a, b)
    return {k: v for k, v in sorted(counts.items()) if v}


@dataclass(frozen=True)
class CycleIndexTerm:
    partition: Tuple[int, ...]
    class_size: int
    pair_cycles: Dict[int, int]


@dataclass(frozen=True)
class PairCycleIndex:
    """Cycle index of the pair group S_n^(2), one term per cycle type of S_n."""

    n: int
    terms: Tuple[CycleIndexTerm, ...]

    def edge_polynomial(self) -> EdgePolynomial:
        """Substitute x_k -> 1 + x^k to obtain Σ_m D(n, m) x^m."""
        m = slot_count(self.n)
        total = [0] * (m + 1)
        for term in self.terms:
            poly = [0] * (m + 1)
            poly[0] = term.class_size
            for k, count in term.pair_cycles.items():
                factor = [(k * j, math.comb(count, j)) for j in range(count + 1)]
                nxt = [0] * (m + 1)
                for degree, coeff in enumerate(poly):
                    if coeff:
                        for shift, binom in factor:
                            nxt[degree + shift] += coeff * binom
                poly = nxt
            for degree, coeff in enumerate(poly):
                total[degree] += coeff
        order = math.factorial(self.n)
        if any(c % order for c in total):
            raise ArithmeticError(f"Cycle-index substitution for n={self.n} is not divisible by n!")
        return EdgePolynomial(tuple(c // order for c in total))


def pair_group_cycle_index(n: int) -> PairCycleIndex:
    if not 1 <= n <= POLYA_LIMIT:
        raise SizeGuardError(f"Pair-group cycle index refused for n={n} (allowed 1..{POLYA_LIMIT})")
    terms = tuple(
        CycleIndexTerm(partition=lam, class_size=class_size(lam), pair_cycles=pair_cycle_type(lam))
        for lam in integer_partitions(n)
    )
    logger.debug(f"Cycle index of S_{n}^(2): {len(terms)} cycle types")
    return PairCycleIndex(n=n, terms=terms)


@lru_cache(maxsize=None)
def unlabeled_edge_counts(n: int) -> EdgePolynomial:
    """D(n, m): unlabeled graphs on n vertices with m edges."""
    return pair_group_cycle_index(n).edge_polynomial()


def polya_free_thermo(beta: float, p: ModelParams) -> ExactObservables:
    """
    Unlabeled free model from D(n, m), at any n the cycle index allows.

    Z^u = Σ_m D(n, m) e^{-βJ(E0 (M-m) + E1 m)}. s₁ is not available from
    edge counts alone and is reported as NaN.
    """
    return observables_from_sums(polya_free_sums(beta, p))


def polya_free_sums(beta: float, p: ModelParams) -> BoltzmannSums:
    _require_free(p)
    n, size = p.n, slot_count(p.n)
    poly = unlabeled_edge_counts(n)
    n1 = np.arange(size + 1, dtype=np.float64)
    log_d = np.array([math.log(c) for c in poly.coefficients], dtype=np.float64)
    energies = energy_from_counts(p, size - n1, n1)
    log_w = log_d - beta * energies
    log_z = float(logsumexp(log_w))
    prob = np.exp(log_w - log_z)
    return BoltzmannSums(
        n=n,
        beta=beta,
        ensemble=Ensemble.UNLABELED,
        log_z=log_z,
        mean_e=float(prob @ energies),
        mean_e2=float(prob @ energies**2),
        mean_s1=math.nan,
        mean_s1_sq=math.nan,
        mean_n1=float(prob @ n1),
        mean_n1_sq=float(prob @ n1**2),
    )
