from fractions import Fraction

import pytest

from qtsplin.model import (
    Arc,
    InputError,
    LinearCostMatrix,
    LinearizationOutcome,
    QuadraticCostMatrix,
    StructuralZeroError,
    Tour,
    Verdict,
    Witness,
    all_arcs,
    arc_from_index,
    dense_index,
    format_rational,
    is_structural_zero,
    normalize_structural_zeros,
    to_rational,
    tour_cost_linear,
    tour_cost_quadratic,
)
from qtsplin.oracle import enumerate_tours


def test_dense_index_examples():
    assert dense_index((1, 2), 4) == 0
    assert dense_index((1, 4), 4) == 2
    assert dense_index((4, 3), 4) == 11


@pytest.mark.parametrize("n", [3, 4, 5, 7])
def test_dense_index_is_a_bijection(n):
    seen = [dense_index(a, n) for a in all_arcs(n)]
    assert seen == list(range(n * (n - 1)))
    assert [arc_from_index(k, n) for k in seen] == all_arcs(n)


def test_dense_index_rejects_loops_and_out_of_range():
    with pytest.raises(InputError):
        dense_index((2, 2), 4)
    with pytest.raises(InputError):
        dense_index((1, 5), 4)


def test_to_rational_is_exact():
    assert to_rational("-7/4") == Fraction(-7, 4)
    assert to_rational(" 6/4 ") == Fraction(3, 2)
    assert to_rational(3) == 3
    for bad in (0.5, True, "1.5", "1e3", "", "1/0", None):
        with pytest.raises(InputError):
            to_rational(bad)


def test_format_rational_canonical():
    assert format_rational(Fraction(4, -6)) == "-2/3"
    assert format_rational(Fraction(8, 4)) == "2"
    assert format_rational(0) == "0"


def test_tour_normalizes_rotation_and_lists_arcs():
    t = Tour((3, 1, 2))
    assert t.order == (1, 2, 3)
    assert t == Tour((1, 2, 3))
    assert t.arcs == (Arc(1, 2), Arc(2, 3), Arc(3, 1))
    assert (2, 3) in t and (3, 2) not in t
    assert t.successor(3) == 1


@pytest.mark.parametrize("order", [(1, 2), (1, 2, 2), (1, 2, 4), (0, 1, 2)])
def test_tour_rejects_non_permutations(order):
    with pytest.raises(InputError):
        Tour(order)


def test_structural_zero_patterns():
    assert is_structural_zero((1, 2), (1, 3))
    assert is_structural_zero((1, 2), (3, 2))
    assert is_structural_zero((1, 2), (2, 1))
    assert not is_structural_zero((1, 2), (1, 2))
    assert not is_structural_zero((1, 2), (2, 3))
    assert not is_structural_zero((1, 2), (3, 4))


def test_normalize_structural_zeros_examples():
    Q, count = normalize_structural_zeros(QuadraticCostMatrix(4, {((1, 2), (1, 3)): 5}))
    assert count == 1 and Q == QuadraticCostMatrix.zeros(4)
    Q, count = normalize_structural_zeros(QuadraticCostMatrix(4, {((1, 2), (2, 1)): 5}))
    assert count == 1 and Q == QuadraticCostMatrix.zeros(4)
    Q, count = normalize_structural_zeros(QuadraticCostMatrix.zeros(4))
    assert count == 0 and Q == QuadraticCostMatrix.zeros(4)


def test_normalize_strict_reports_the_cell():
    Q = QuadraticCostMatrix(4, {((1, 2), (3, 4)): 1, ((1, 2), (1, 3)): 5})
    with pytest.raises(StructuralZeroError) as info:
        normalize_structural_zeros(Q, strict=True)
    assert info.value.cell == ((1, 2), (1, 3))
    assert info.value.value == 5
    assert normalize_structural_zeros(Q.transpose(), strict=False)[1] == 1


def test_tour_cost_linear_examples():
    ones = LinearCostMatrix.from_function(5, lambda i, j: 1)
    zero = LinearCostMatrix.zeros(5)
    a = (0, 1, 2, 3)
    weak = LinearCostMatrix.from_function(4, lambda i, j: a[i - 1])
    for t in enumerate_tours(5):
        assert tour_cost_linear(ones, t) == 5
        assert tour_cost_linear(zero, t) == 0
    for t in enumerate_tours(4):
        assert tour_cost_linear(weak, t) == 6


def test_linear_cost_ignores_diagonal():
    C = LinearCostMatrix.from_entries(4, {(1, 2): 3})
    assert C[1, 1] == 0
    with pytest.raises(InputError):
        LinearCostMatrix.from_entries(4, {(2, 2): 3})


def test_tour_cost_quadratic_examples():
    single = QuadraticCostMatrix(4, {((1, 2), (1, 2)): 5})
    for t in enumerate_tours(4):
        assert tour_cost_quadratic(single, t) == (5 if (1, 2) in t else 0)
    pair = QuadraticCostMatrix(4, {((1, 2), (3, 4)): 1, ((3, 4), (1, 2)): 1})
    assert tour_cost_quadratic(pair, Tour((1, 2, 3, 4))) == 2
    full = QuadraticCostMatrix(
        4, {(e, f): 1 for e in all_arcs(4) for f in all_arcs(4) if not is_structural_zero(e, f)}
    )
    # 4 tour arcs give 16 ordered pairs, none of them null
    assert tour_cost_quadratic(full, Tour((1, 2, 3, 4))) == 16


def test_quadratic_arithmetic_and_views():
    Q = QuadraticCostMatrix(4, {((1, 2), (3, 4)): Fraction(1, 2), ((2, 3), (2, 3)): 2})
    assert Q.dimension == 12
    assert (Q + Q)[(1, 2), (3, 4)] == 1
    assert (Q - Q) == QuadraticCostMatrix.zeros(4)
    assert (3 * Q)[(2, 3), (2, 3)] == 6
    assert Q.transpose()[(3, 4), (1, 2)] == Fraction(1, 2)
    dense = Q.dense()
    assert dense[dense_index((1, 2), 4)][dense_index((3, 4), 4)] == Fraction(1, 2)
    assert QuadraticCostMatrix(4, {((1, 2), (3, 4)): 0}).cells == {}


def test_without_last_node_drops_cells_touching_n():
    Q = QuadraticCostMatrix(4, {((1, 2), (2, 3)): 1, ((1, 4), (2, 3)): 7})
    sub = Q.without_last_node()
    assert sub.n == 3
    assert dict(sub.cells) == {((1, 2), (2, 3)): 1}


def test_outcome_invariants():
    with pytest.raises(ValueError):
        LinearizationOutcome(Verdict.LINEARIZABLE)
    with pytest.raises(ValueError):
        LinearizationOutcome(Verdict.NOT_LINEARIZABLE, LinearCostMatrix.zeros(3))
    w = Witness("condition2", 5, 0, ())
    out = LinearizationOutcome(Verdict.NOT_LINEARIZABLE, witness=w)
    assert not out.linearizable
    assert w.to_dict()["kind"] == "condition2"
