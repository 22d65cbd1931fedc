from collections import deque
from fractions import Fraction

import pytest

from qtsplin.generators import gen_diagonal, gen_random, gen_row_cvp, gen_tensor_sum, random_linear
from qtsplin.linearizer import (
    build_arc_cotour_tree,
    base_case_linearize,
    cotour_adjacent,
    eta_for_pair,
    linearize,
    linearize_reduced,
    normalize_lambda,
    solve_f_tilde,
    sufficient_row_cvp,
    verify_linearization,
    z_matrix,
    zero_border_normalize,
)
from qtsplin.model import (
    InputError,
    LinearCostMatrix,
    QuadraticCostMatrix,
    Tour,
    Verdict,
    all_arcs,
    diagonal_embedding,
    tour_cost_linear,
    tour_cost_quadratic,
)
from qtsplin.oracle import brute_fixed_arcs_cvp, brute_linearize, brute_verify, enumerate_tours
from qtsplin.reduction import qrf_decompose


def symmetric(n, pairs):
    cells = {}
    for (e, f), v in pairs.items():
        cells[e, f] = v
        cells[f, e] = v
    return QuadraticCostMatrix(n, cells)


# A reduced 5-node matrix on which every tree-edge and condition-2 check
# passes but which the oracle rejects; only the per-arc closure check
# catches it.
CLOSURE_ONLY = symmetric(5, {
    ((1, 2), (2, 3)): 5,
    ((1, 2), (2, 4)): 7,
    ((1, 2), (3, 1)): 17,
    ((1, 2), (3, 4)): 8,
    ((1, 2), (4, 1)): 11,
    ((1, 3), (2, 1)): 12,
})


def reduced_qbar(Q):
    return qrf_decompose(Q).reduced.without_last_node()


def test_z_matrix_examples():
    assert z_matrix(QuadraticCostMatrix.zeros(4), (1, 2)).matrix == LinearCostMatrix.zeros(4)
    Z = z_matrix(QuadraticCostMatrix(4, {((1, 2), (3, 4)): 7}), (1, 2)).matrix
    assert Z[3, 4] == 7 and sum(v for _, v in Z.entries()) == 7
    Z = z_matrix(QuadraticCostMatrix(4, {((1, 2), (1, 2)): 9}), (1, 2)).matrix
    assert Z == LinearCostMatrix.zeros(4)
    with pytest.raises(InputError):
        z_matrix(QuadraticCostMatrix.zeros(4), (1, 5))


def test_cotour_adjacency_examples():
    assert cotour_adjacent((1, 2), (3, 4), 4)
    assert not cotour_adjacent((1, 2), (2, 1), 4)
    assert not cotour_adjacent((1, 2), (3, 2), 5)


@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_adjacency_matches_tour_enumeration(m):
    together = set()
    for t in enumerate_tours(m):
        together.update((a, b) for a in t.arcs for b in t.arcs if a != b)
    for a in all_arcs(m):
        for b in all_arcs(m):
            assert cotour_adjacent(a, b, m) == ((a, b) in together)


def _reachable_from(m, root):
    seen = {root}
    queue = deque([root])
    while queue:
        a = queue.popleft()
        for t in enumerate_tours(m):
            if a in t:
                for b in t.arcs:
                    if b not in seen:
                        seen.add(b)
                        queue.append(b)
    return seen


def test_three_node_graph_splits_into_two_trees():
    tree = build_arc_cotour_tree(3)
    assert len(_reachable_from(3, (1, 2))) == 3
    assert tree.roots == ((1, 2), (1, 3))
    assert len(tree.bfs_order) == 6 and len(tree.parent) == 4


@pytest.mark.parametrize("m", [4, 5, 6, 7])
def test_tree_spans_connected_graph(m):
    tree = build_arc_cotour_tree(m)
    assert len(_reachable_from(m, (1, 2))) == m * (m - 1)
    assert tree.root == (1, 2)
    assert len(tree.parent) == m * (m - 1) - 1
    assert tree.bfs_order[0] == (1, 2)
    for child, par in tree.parent.items():
        assert cotour_adjacent(child, par, m)
        assert tree.bfs_order.index(par) < tree.bfs_order.index(child)


def test_eta_examples():
    assert eta_for_pair(QuadraticCostMatrix.zeros(4), (1, 2), (3, 4)) == 0
    Qbar = reduced_qbar(gen_diagonal(5, 1).Q)
    for child, par in build_arc_cotour_tree(4).parent.items():
        assert eta_for_pair(Qbar, child, par) is not None


def test_eta_single_pair_scope():
    Qbar = symmetric(4, {((1, 2), (3, 4)): 1})
    # only 1->2->3->4->1 carries both arcs, and there the difference is 1 - 1
    assert eta_for_pair(Qbar, (1, 2), (3, 4)) == 0
    # over all six tours the same difference takes several values
    assert eta_for_pair(Qbar, (1, 2), (3, 4), scope="all") is None


def test_full_scope_is_too_strict_for_linearizable_instances():
    Q = gen_tensor_sum(5, 0).Q
    assert linearize(Q).linearizable
    Qbar = reduced_qbar(Q)
    tree = build_arc_cotour_tree(4)
    fails = [p for p in tree.parent.items() if eta_for_pair(Qbar, *p, scope="all") is None]
    assert fails


def test_solve_f_tilde_zero_and_tree_equations():
    tree = build_arc_cotour_tree(4)
    F, failure = solve_f_tilde(tree, QuadraticCostMatrix.zeros(4))
    assert failure is None and F == LinearCostMatrix.zeros(4)
    Qbar = reduced_qbar(gen_tensor_sum(5, 3).Q)
    F, failure = solve_f_tilde(tree, Qbar)
    assert failure is None
    assert F[tree.root] == 0
    for child, par in tree.parent.items():
        assert F[child] - F[par] == 2 * eta_for_pair(Qbar, child, par)


def test_solve_f_tilde_reports_first_failing_pair():
    tree = build_arc_cotour_tree(5)
    Qbar = reduced_qbar(diagonal_embedding(random_linear(6, 0)) + symmetric(6, {((1, 2), (3, 4)): 1}))
    F, failure = solve_f_tilde(tree, Qbar)
    assert F is None
    child, par, P = failure
    assert tree.parent[child] == par
    assert brute_fixed_arcs_cvp(P, [child, par]) is None


def test_normalize_lambda_examples():
    tree = build_arc_cotour_tree(4)
    zero = normalize_lambda(QuadraticCostMatrix.zeros(4), LinearCostMatrix.zeros(4), tree)
    assert zero.lam == 0 and zero.values == LinearCostMatrix.zeros(4)
    Qbar = reduced_qbar(gen_diagonal(5, 2).Q)
    F_tilde, _ = solve_f_tilde(tree, Qbar)
    base = normalize_lambda(Qbar, F_tilde, tree)
    c = Fraction(5, 3)
    shifted = normalize_lambda(Qbar, F_tilde + LinearCostMatrix.from_function(4, lambda i, j: c), tree)
    assert shifted.lam == base.lam - c
    assert shifted.values == base.values
    for t in enumerate_tours(4):
        assert tour_cost_quadratic(Qbar, t) == Fraction(3, 2) * tour_cost_linear(base.values, t)


def test_linearize_reduced_examples():
    out = linearize_reduced(QuadraticCostMatrix.zeros(5))
    assert out.linearizable and out.linearization == LinearCostMatrix.zeros(5)
    QR = qrf_decompose(gen_diagonal(5, 3).Q).reduced
    out = linearize_reduced(QR)
    assert out.linearizable and brute_verify(QR, out.linearization)
    bumped = QR + symmetric(5, {((1, 2), (3, 4)): 1})
    out = linearize_reduced(bumped)
    assert out.verdict is Verdict.NOT_LINEARIZABLE
    assert brute_linearize(bumped) is None
    with pytest.raises(ValueError):
        linearize_reduced(QuadraticCostMatrix(5, {((1, 2), (3, 4)): 1}))


def test_linearize_examples():
    for seed in range(5):
        Q = QuadraticCostMatrix(3, {((1, 2), (2, 3)): seed + 1, ((3, 1), (3, 1)): -seed})
        assert linearize(Q).linearizable
    Q = gen_tensor_sum(6, 0).Q
    out = linearize(Q)
    assert out.linearizable
    assert verify_linearization(Q, out.linearization, mode="sample", samples=200, seed=1) is None
    Q = gen_random(5, 7, 1).Q
    assert linearize(Q).linearizable == (brute_linearize(Q) is not None)
    with pytest.raises(InputError):
        linearize(QuadraticCostMatrix.zeros(2))


def test_linearize_stats():
    out = linearize(gen_tensor_sum(6, 1).Q)
    assert out.stats["n"] == 6
    assert out.stats["recursion_depth"] == 3
    assert set(out.stats["timings"]) >= {"qrf", "condition1_tree", "condition2", "condition1_closure"}
    assert out.stats["fast_path_used"] is False


def test_base_case_examples():
    assert base_case_linearize(QuadraticCostMatrix.zeros(3)) == LinearCostMatrix.zeros(3)
    Q = QuadraticCostMatrix(3, {((1, 2), (1, 2)): 4, ((1, 3), (1, 3)): 9})
    C = base_case_linearize(Q)
    assert C[1, 2] == 4 and C[1, 3] == 9
    assert sum(v != 0 for _, v in C.entries()) == 2
    assert brute_verify(Q, C)
    with pytest.raises(InputError):
        base_case_linearize(QuadraticCostMatrix.zeros(4))


def test_zero_border_normalize_examples():
    C = LinearCostMatrix.from_entries(4, {(1, 2): 3, (2, 3): -1})
    assert zero_border_normalize(C) == C
    ones = LinearCostMatrix.from_function(4, lambda i, j: 1)
    out = zero_border_normalize(ones)
    assert all(out[i, 4] == 0 and out[4, i] == 0 for i in range(1, 4))
    assert all(tour_cost_linear(out, t) == 4 for t in enumerate_tours(4))
    C = random_linear(5, 8)
    out = zero_border_normalize(C)
    assert all(out[i, 5] == 0 and out[5, i] == 0 for i in range(1, 5))
    assert all(tour_cost_linear(out, t) == tour_cost_linear(C, t) for t in enumerate_tours(5))


def test_sufficient_row_cvp_examples():
    assert sufficient_row_cvp(QuadraticCostMatrix.zeros(5)) == LinearCostMatrix.zeros(5)
    inst = gen_row_cvp(5, 3)
    assert sufficient_row_cvp(inst.Q) == inst.planted
    assert sufficient_row_cvp(gen_random(5, 0).Q) is None


@pytest.mark.parametrize("n", [4, 5, 6])
def test_fast_path_agrees_with_full_pipeline(n):
    for seed in range(3):
        Q = gen_row_cvp(n, seed).Q
        fast = linearize(Q, fast_path=True)
        full = linearize(Q)
        assert fast.stats["fast_path_used"]
        for t in enumerate_tours(n):
            assert tour_cost_linear(fast.linearization, t) == tour_cost_linear(full.linearization, t)
    assert not linearize(gen_tensor_sum(n, 0).Q, fast_path=True).stats["fast_path_used"]


@pytest.mark.parametrize("n", [5, 6])
def test_condition1_telescoping(n):
    QR = qrf_decompose(gen_tensor_sum(n, 5).Q).reduced
    Qbar = QR.without_last_node()
    m = n - 1
    tree = build_arc_cotour_tree(m)
    F = normalize_lambda(Qbar, solve_f_tilde(tree, Qbar)[0], tree).values
    Z = {a: z_matrix(Qbar, a).matrix for a in all_arcs(m)}
    for t in enumerate_tours(m):
        values = {a: tour_cost_linear(Z[a], t) for a in t.arcs}
        for a in t.arcs:
            for b in t.arcs:
                assert F[a] - F[b] == 2 * (values[a] - values[b])


def test_closure_check_is_needed():
    assert brute_linearize(CLOSURE_ONLY) is None
    out = linearize(CLOSURE_ONLY)
    assert out.verdict is Verdict.NOT_LINEARIZABLE
    w = out.witness
    assert w.kind == "closure" and w.level == 5 and w.depth == 0
    (a,) = w.arcs
    assert brute_fixed_arcs_cvp(w.matrix, [a]) != w.expected


def test_strict_mode_rejects_null_cells():
    Q = gen_diagonal(5, 0).Q + QuadraticCostMatrix(5, {((1, 2), (1, 3)): 1})
    assert linearize(Q).stats["structural_zeros_cleared"] == 1
    with pytest.raises(InputError):
        linearize(Q, strict=True)


def test_verify_linearization_modes():
    inst = gen_diagonal(9, 1)
    assert verify_linearization(inst.Q, inst.planted, mode="sample", samples=50) is None
    bad = inst.planted + LinearCostMatrix.from_entries(9, {(3, 1): 1})
    t = verify_linearization(inst.Q, bad, mode="sample", samples=500, seed=3)
    assert isinstance(t, Tour) and (3, 1) in t
    assert verify_linearization(gen_diagonal(5, 1).Q, gen_diagonal(5, 1).planted, mode="exhaustive") is None
    with pytest.raises(InputError):
        verify_linearization(inst.Q, inst.planted, mode="fast")


def test_every_four_node_instance_is_linearizable():
    # the six tours of K_4 have independent arc-incidence rows, so any tour
    # values at all are realized by some linear cost
    for seed in range(10):
        Q = gen_random(4, seed, 1).Q
        out = linearize(Q)
        assert out.linearizable and brute_verify(Q, out.linearization)
