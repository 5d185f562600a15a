"""
Exact operator identities on small tensor-product bases.
"""

from fractions import Fraction
from functools import partial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ..graph_state import GraphState, SizeGuardError, angle_count, edge_index, slot_count
from ..hilbert import (
    BasisKet,
    ProjectedVertexOperator,
    Sector,
    StateVector,
    SubgraphSpec,
    antisymmetrize,
    basis,
    basis_size,
    edge_number,
    indicator_apply,
    indicator_from_ladders,
    ladder_apply,
    ladder_power,
    number_apply,
    occupation_census,
    operator_matrix,
    permute,
    permute_ket,
    subgraph_indicator,
    subgraph_number,
    symmetrize,
    vertex_degree,
)
from ..symmetry import Permutation, all_permutations


def _matrix(fn, n, d, sector=Sector.ANTISYMMETRIC):
    return operator_matrix(fn, n, d, sector)


def _same(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and bool((a == b).all())


def _diag(*values) -> np.ndarray:
    mat = np.full((len(values), len(values)), Fraction(0), dtype=object)
    for i, v in enumerate(values):
        mat[i, i] = Fraction(v)
    return mat


@st.composite
def state_vectors(draw, n=4, d=2, sector=Sector.ANTISYMMETRIC):
    size = slot_count(n)
    terms = draw(st.lists(
        st.tuples(
            st.tuples(*[st.integers(0, d - 1)] * size),
            st.integers(-3, 3),
        ),
        min_size=1,
        max_size=4,
    ))
    v = StateVector(n, d, sector)
    for levels, amp in terms:
        v.add(levels, Fraction(amp))
    return v


# ---------------------------------------------------------------------------
# Ladder and indicator operators
# ---------------------------------------------------------------------------


def test_raising_at_top_level_annihilates():
    ket = BasisKet(3, 2, (1, 0, 0))
    assert ladder_apply("+", 0, StateVector.of(ket)).is_zero()
    assert ladder_apply("+", 1, StateVector.of(ket)) == StateVector.of(BasisKet(3, 2, (1, 1, 0)))
    assert ladder_apply("-", 1, StateVector.of(ket)).is_zero()


@pytest.mark.parametrize("d", [2, 3, 4])
def test_ladder_nilpotent(d):
    for ket in basis(2, d):
        assert ladder_power("+", 0, d, StateVector.of(ket)).is_zero()
        assert ladder_power("-", 0, d, StateVector.of(ket)).is_zero()


def test_ladder_rejects_bad_direction():
    with pytest.raises(ValueError):
        ladder_apply("up", 0, StateVector.of(BasisKet(2, 2, (0,))))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_one_slot_commutation_relations(d):
    """[L+, L-] = diag(-1, 0, ..., 0, 1) and {L+, L-} = diag(1, 2, ..., 2, 1)."""
    up = _matrix(partial(ladder_apply, "+", 0), 2, d)
    down = _matrix(partial(ladder_apply, "-", 0), 2, d)
    commutator = up.dot(down) - down.dot(up)
    anticommutator = up.dot(down) + down.dot(up)
    expected_comm = [0] * d
    expected_comm[0], expected_comm[-1] = -1, 1
    expected_anti = [2] * d
    expected_anti[0] -= 1
    expected_anti[-1] -= 1
    assert _same(commutator, _diag(*expected_comm))
    assert _same(anticommutator, _diag(*expected_anti))


def test_commutator_in_transposed_layout():
    """With rows indexing the input ket, the D=3 commutator reads diag(1, 0, -1)."""
    up = _matrix(partial(ladder_apply, "+", 0), 2, 3).T
    down = _matrix(partial(ladder_apply, "-", 0), 2, 3).T
    assert _same(up.dot(down) - down.dot(up), _diag(1, 0, -1))


def test_ladders_on_distinct_slots_commute():
    n, d = 3, 2
    for e in range(slot_count(n)):
        for f in range(slot_count(n)):
            if e == f:
                continue
            for a in "+-":
                for b in "+-":
                    x = _matrix(partial(ladder_apply, a, e), n, d)
                    y = _matrix(partial(ladder_apply, b, f), n, d)
                    assert _same(x.dot(y), y.dot(x)), f"L{a}_{e} and L{b}_{f} do not commute"


def test_indicator_examples():
    ket = StateVector.of(BasisKet(4, 2, (0,) * 6))
    assert indicator_apply(2, 0, ket) == ket
    assert indicator_apply(2, 1, ket).is_zero()
    with pytest.raises(ValueError):
        indicator_apply(0, 2, ket)


@pytest.mark.parametrize("d", [2, 3])
def test_indicator_from_ladder_word(d):
    for k in range(d):
        direct = _matrix(lambda v: indicator_apply(0, k, v), 2, d)
        word = _matrix(lambda v: indicator_from_ladders(0, k, v), 2, d)
        assert _same(direct, word), f"ladder word for I^{k} differs at D={d}"
        assert _same(direct.dot(direct), direct), "indicator must be idempotent"


def test_subgraph_indicator_is_product():
    n, d = 4, 2
    g = SubgraphSpec(((0, 1), (1, 2)), level=1)
    for ket in basis(n, d):
        v = StateVector.of(ket)
        expected = indicator_apply(edge_index(1, 2, n), 1, indicator_apply(edge_index(0, 1, n), 1, v))
        assert subgraph_indicator(g, v) == expected


def test_subgraph_spec_validation():
    with pytest.raises(ValueError):
        SubgraphSpec(((0, 0),))
    with pytest.raises(ValueError):
        SubgraphSpec(((0, 1), (1, 0)))


# ---------------------------------------------------------------------------
# Number operators
# ---------------------------------------------------------------------------


def test_number_operators_on_empty_level_one():
    ket = BasisKet(4, 2, (0,) * 6)
    triangle = SubgraphSpec(((0, 1), (0, 2), (1, 2)), level=0)
    assert edge_number(ket, 0) == 6
    assert edge_number(ket, 1) == 0
    assert subgraph_number(ket, triangle) == 4
    assert number_apply(0, StateVector.of(ket)) == StateVector.of(ket, 6)


def test_angle_subgraph_number_matches_angle_count():
    angle = SubgraphSpec(((0, 1), (1, 2)), level=1)
    for n in range(3, 6):
        for bits in range(1 << slot_count(n)):
            state = GraphState(n, bits)
            ket = BasisKet(n, 2, tuple(state.level(e) for e in range(state.m)))
            assert subgraph_number(ket, angle) == angle_count(state, 1), f"mismatch on {state}"


# ---------------------------------------------------------------------------
# Permutations and projections
# ---------------------------------------------------------------------------


def test_transposition_phase_examples():
    # |1>_01 |1>_02 |0>_12 in the antisymmetric sector
    ket = BasisKet(3, 2, (1, 1, 0), Sector.ANTISYMMETRIC)
    image, phase = permute_ket(Permutation.from_cycles(3, (0, 1)), ket)
    assert (image.levels, phase) == ((1, 0, 1), -1)
    image, phase = permute_ket(Permutation.from_cycles(3, (1, 2)), ket)
    assert (image.levels, phase) == ((1, 1, 0), -1)
    image, phase = permute_ket(Permutation.identity(3), ket)
    assert (image, phase) == (ket, 1)


def test_symmetric_sector_has_no_phase():
    ket = BasisKet(4, 2, (1, 0, 1, 1, 0, 0), Sector.SYMMETRIC)
    for pi in all_permutations(4):
        assert permute_ket(pi, ket)[1] == 1


def test_antisymmetric_phase_is_sign():
    ket = BasisKet(4, 3, (2, 0, 1, 1, 0, 2), Sector.ANTISYMMETRIC)
    for pi in all_permutations(4):
        assert permute_ket(pi, ket)[1] == pi.sign()


def test_four_cycle_antisymmetrization():
    """D=3 state with G0 a 4-cycle, G2 its diagonals: three images, weight 1/3 each."""
    n, d = 4, 3
    ket = BasisKet.from_level_sets(n, d, {0: [(0, 1), (0, 3), (1, 2), (2, 3)], 2: [(0, 2), (1, 3)]})
    expected = StateVector(n, d, Sector.ANTISYMMETRIC)
    for level_edges in (
        {0: [(0, 1), (0, 3), (1, 2), (2, 3)], 2: [(0, 2), (1, 3)]},
        {0: [(0, 1), (1, 3), (0, 2), (2, 3)], 2: [(1, 2), (0, 3)]},
        {0: [(1, 3), (0, 3), (1, 2), (0, 2)], 2: [(2, 3), (0, 1)]},
    ):
        expected.add(BasisKet.from_level_sets(n, d, level_edges).levels, Fraction(1, 3))
    assert antisymmetrize(StateVector.of(ket)) == expected


@settings(max_examples=15, deadline=None)
@given(state_vectors())
def test_projections_are_idempotent_and_orthogonal(v):
    a, s = antisymmetrize(v), symmetrize(v)
    assert antisymmetrize(a) == a
    assert symmetrize(s) == s
    assert symmetrize(a).is_zero()
    assert antisymmetrize(s).is_zero()


@pytest.mark.parametrize("sector", list(Sector))
def test_projector_absorbs_permutations(sector):
    n, d = 3, 2
    s_mat = _matrix(symmetrize, n, d, sector)
    a_mat = _matrix(antisymmetrize, n, d, sector)
    for pi in all_permutations(n):
        p_mat = _matrix(partial(permute, pi), n, d, sector)
        assert _same(p_mat.dot(s_mat), s_mat)
        assert _same(s_mat.dot(p_mat), s_mat)
        signed = a_mat * pi.sign()
        assert _same(p_mat.dot(a_mat), signed)
        assert _same(a_mat.dot(p_mat), signed)


def test_ladder_conjugation_covariance():
    n, d = 3, 2
    for pi in all_permutations(n):
        inv = pi.inverse()
        for e, (i, j) in enumerate([(0, 1), (0, 2), (1, 2)]):
            conjugated = _matrix(lambda v: permute(pi, ladder_apply("+", e, permute(inv, v))), n, d)
            moved = _matrix(partial(ladder_apply, "+", edge_index(pi(i), pi(j), n)), n, d)
            assert _same(conjugated, moved), f"conjugation by {pi.image} moves slot {e} wrongly"


def test_projection_guard():
    with pytest.raises(SizeGuardError):
        symmetrize(StateVector.of(BasisKet(7, 2, (0,) * slot_count(7))))


# ---------------------------------------------------------------------------
# Projected vertex observables
# ---------------------------------------------------------------------------


def test_projected_degree_example():
    """deg^0 on A|G> of a star-plus-leaf state is 3/2."""
    ket = BasisKet.from_level_sets(4, 3, {0: [(0, 1), (1, 2), (1, 3)], 2: [(0, 2), (0, 3), (2, 3)]})
    op = ProjectedVertexOperator(vertex_degree, 0)
    assert [vertex_degree(ket, i, 0) for i in range(4)] == [1, 3, 1, 1]
    assert op.eigenvalue_on(antisymmetrize(StateVector.of(ket))) == Fraction(3, 2)


def test_projected_degree_on_regular_graph():
    # G1 = 4-cycle, 2-regular
    ket = BasisKet.from_level_sets(4, 2, {1: [(0, 1), (1, 2), (2, 3), (0, 3)]})
    op = ProjectedVertexOperator(vertex_degree, 1)
    assert op.eigenvalue(ket) == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 5).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, (1 << slot_count(n)) - 1))))
def test_projected_degree_is_vertex_average(case):
    n, bits = case
    state = GraphState(n, bits)
    ket = BasisKet(n, 2, tuple(state.level(e) for e in range(state.m)))
    op = ProjectedVertexOperator(vertex_degree, 1, vertex=n - 1)
    average = Fraction(sum(vertex_degree(ket, i, 1) for i in range(n)), n)
    assert op.eigenvalue(ket) == average == Fraction(2 * state.n1, n)


# ---------------------------------------------------------------------------
# Basis census
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("n, d, size", [(3, 2, 8), (3, 3, 27), (4, 2, 64)])
def test_basis_size(n, d, size):
    assert basis_size(n, d) == size
    assert sum(1 for _ in basis(n, d)) == size


def test_basis_size_guard():
    with pytest.raises(SizeGuardError):
        basis_size(8, 2)


def test_occupation_census_stirling_identity():
    census = occupation_census(3, 3)
    assert census == {0: (0, 0), 1: (3, 3), 2: (18, 18), 3: (6, 6)}
    assert sum(count for count, _ in census.values()) == 27
    for n, d in [(3, 2), (4, 2), (4, 3)]:
        census = occupation_census(n, d)
        assert all(count == formula for count, formula in census.values()), f"census mismatch n={n} D={d}"


if __name__ == "__main__":
    test_transposition_phase_examples()
    test_four_cycle_antisymmetrization()
    test_projected_degree_example()
    print("All tests passed!")
