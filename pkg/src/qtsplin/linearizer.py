"""Decide linearizability of a quadratic TSP cost matrix and build a linearization.

Pipeline for an ``n``-node instance:

1. clear structural zeros and split ``Q`` into reduced form ``Q_R`` plus a
   linear part ``L``;
2. on the reduced matrix, drop node ``n`` to get ``Qbar`` on ``m = n - 1``
   nodes and the per-arc row matrices ``Z[a]``;
3. propagate ``f[a] - f[b] = 2 eta(a, b)`` along a BFS spanning tree of the
   arc-cotour graph, where ``eta(a, b)`` is the common value of
   ``Z[a] - Z[b]`` over the tours containing both arcs, then fix the
   additive constant so that ``(n-2)/(n-3) F`` matches ``Qbar`` on a
   reference tour;
4. recurse on ``Qbar`` to get a linearization ``H`` and require
   ``H - (n-2)/(n-3) F`` to be a constant-value matrix with constant 0;
5. require, for every arc ``a``, that ``2 Z[a] - F/(n-3)`` is worth exactly
   ``f[a]`` on every tour through ``a``;
6. report ``C + L`` where ``C`` is ``F`` bordered by zeros.

Step 5 is what makes the tree equations sufficient: it restates, arc by arc,
that ``2 Z[a](tour) - f[a]`` does not depend on which tour arc ``a`` is.
"""

from __future__ import annotations

import functools
import itertools
import random
import time
from collections import defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from qtsplin.cvp import cvp_constant, fixed_arcs_cvp_constant, has_zero_cvp, kl_cvp_decompose
from qtsplin.model import (
    Arc,
    InputError,
    LinearCostMatrix,
    LinearizationOutcome,
    QuadraticCostMatrix,
    Tour,
    Verdict,
    Witness,
    all_arcs,
    denominator_lcm,
    normalize_structural_zeros,
    tour_cost_linear,
    tour_cost_quadratic,
)
from qtsplin.reduction import is_quadratic_reduced, qrf_decompose

EXHAUSTIVE_VERIFY_MAX_N = 8
DEFAULT_VERIFY_SAMPLES = 1000


@dataclass(frozen=True)
class ZMatrix:
    """Row ``owner`` of ``Qbar`` laid out as an ``m x m`` linear cost matrix, owner cell zeroed."""

    owner: Arc
    matrix: LinearCostMatrix


@dataclass(frozen=True)
class ArcCotourTree:
    """BFS spanning forest of the arc-cotour graph on ``m`` nodes.

    For ``m >= 4`` the graph is connected and ``roots == ((1, 2),)``. On 3 nodes
    the two tours share no arc and neither do their arc sets in the graph, so
    there is one tree per tour, rooted at ``(1, 2)`` and ``(1, 3)``.
    """

    m: int
    roots: tuple[Arc, ...]
    parent: dict[Arc, Arc]
    bfs_order: tuple[Arc, ...]
    component: dict[Arc, Arc]

    @property
    def root(self) -> Arc:
        return self.roots[0]


@dataclass(frozen=True)
class FCandidate:
    values: LinearCostMatrix
    lambdas: tuple[Fraction, ...]  # one per tree root

    @property
    def lam(self) -> Fraction:
        return self.lambdas[0]


def z_matrix(Qbar: QuadraticCostMatrix, arc: tuple[int, int]) -> ZMatrix:
    m = Qbar.n
    i, j = arc
    if not (1 <= i <= m and 1 <= j <= m) or i == j:
        raise InputError(f"arc ({i},{j}) is not an arc of the {m}-node subproblem")
    owner = Arc(i, j)
    row = {f: v for (e, f), v in Qbar.cells.items() if e == owner}
    return ZMatrix(owner, _z_from_row(m, owner, row))


def _z_from_row(m: int, owner: Arc, row: dict) -> LinearCostMatrix:
    grid = [[0] * m for _ in range(m)]
    for (u, v), value in row.items():
        if (u, v) != owner:
            grid[u - 1][v - 1] = value
    return LinearCostMatrix(m, tuple(tuple(r) for r in grid))


def _z_matrices(Qbar: QuadraticCostMatrix) -> dict[Arc, LinearCostMatrix]:
    rows: dict[Arc, dict] = defaultdict(dict)
    for (e, f), v in Qbar.cells.items():
        rows[e][f] = v
    return {a: _z_from_row(Qbar.n, a, rows.get(a, {})) for a in all_arcs(Qbar.n)}


def cotour_adjacent(a: tuple[int, int], b: tuple[int, int], m: int) -> bool:
    """True when some tour on ``m >= 3`` nodes contains both arcs ``a != b``."""
    (i, j), (k, l) = a, b
    if (i, j) == (k, l):
        return False
    return i != k and j != l and (k, l) != (j, i)


@functools.lru_cache(maxsize=None)
def build_arc_cotour_tree(m: int) -> ArcCotourTree:
    if m < 3:
        raise InputError(f"arc-cotour graph needs m >= 3, got {m}")
    arcs = all_arcs(m)
    parent: dict[Arc, Arc] = {}
    component: dict[Arc, Arc] = {}
    order: list[Arc] = []
    roots: list[Arc] = []
    for start in arcs:
        if start in component:
            continue
        if roots and m != 3:
            raise RuntimeError(
                f"arc-cotour graph on {m} nodes is disconnected: "
                f"{start} unreachable from {roots[0]}"
            )
        roots.append(start)
        component[start] = start
        order.append(start)
        queue = deque([start])
        while queue:
            a = queue.popleft()
            for b in arcs:
                if b not in component and cotour_adjacent(a, b, m):
                    component[b] = start
                    parent[b] = a
                    order.append(b)
                    queue.append(b)
    return ArcCotourTree(m, tuple(roots), parent, tuple(order), component)


def _pair_eta(za: LinearCostMatrix, zb: LinearCostMatrix, a: Arc, b: Arc) -> tuple[Optional[Fraction], LinearCostMatrix]:
    diff = za - zb
    return fixed_arcs_cvp_constant(diff, [a, b]), diff


def eta_for_pair(
    Qbar: QuadraticCostMatrix,
    a: tuple[int, int],
    b: tuple[int, int],
    *,
    scope: str = "cotour",
) -> Optional[Fraction]:
    """Common value of ``Z[a] - Z[b]`` over the tours of ``Qbar`` containing both arcs.

    ``None`` means the value varies, so the pair witnesses non-linearizability.
    ``scope="all"`` asks instead for the CVP constant over every tour, a
    stronger property that linearizable instances need not have; the
    linearizer never uses it.
    """
    if tuple(a) == tuple(b):
        raise InputError("eta needs two distinct arcs")
    a, b = Arc(*a), Arc(*b)
    za, zb = z_matrix(Qbar, a).matrix, z_matrix(Qbar, b).matrix
    if scope == "all":
        return cvp_constant(za - zb)
    if scope != "cotour":
        raise InputError(f"unknown eta scope {scope!r}")
    eta, _ = _pair_eta(za, zb, a, b)
    return eta


def solve_f_tilde(
    tree: ArcCotourTree,
    Qbar: QuadraticCostMatrix,
    z: Optional[dict[Arc, LinearCostMatrix]] = None,
) -> tuple[Optional[LinearCostMatrix], Optional[tuple[Arc, Arc, LinearCostMatrix]]]:
    """Propagate ``f[child] = f[parent] + 2 eta(child, parent)`` from ``f[root] = 0``.

    Returns ``(F_tilde, None)`` on success or ``(None, (child, parent, P))``
    for the first tree edge, in BFS order, whose difference matrix ``P`` has
    no common value over the tours through both arcs.
    """
    if tree.m != Qbar.n:
        raise InputError(f"tree on {tree.m} nodes, matrix on {Qbar.n}")
    if z is None:
        z = _z_matrices(Qbar)
    f: dict[Arc, Fraction] = {r: Fraction(0) for r in tree.roots}
    for child in tree.bfs_order:
        if child in f:
            continue
        par = tree.parent[child]
        eta, diff = _pair_eta(z[child], z[par], child, par)
        if eta is None:
            return None, (child, par, diff)
        f[child] = f[par] + 2 * eta
    return LinearCostMatrix.from_entries(tree.m, f), None


def _reference_tours(tree: ArcCotourTree) -> list[Tour]:
    m = tree.m
    if len(tree.roots) == 1:
        return [Tour(tuple(range(1, m + 1)))]
    # one tour per component, each lying entirely inside it
    refs = []
    for root in tree.roots:
        for p in itertools.permutations(range(2, m + 1)):
            t = Tour((1,) + p)
            if all(tree.component[a] == root for a in t.arcs):
                refs.append(t)
                break
        else:
            raise RuntimeError(f"no reference tour inside component of {root}")
    return refs


def normalize_lambda(
    Qbar: QuadraticCostMatrix,
    f_tilde: LinearCostMatrix,
    tree: Optional[ArcCotourTree] = None,
) -> FCandidate:
    """Shift ``F_tilde`` by ``lambda`` per tree component so condition 2 holds on a reference tour.

    With ``n = m + 1`` and reference tour ``t``:
    ``lambda = ((n-3)/(n-2) Qbar[t] - F_tilde(t)) / m``.
    """
    m = Qbar.n
    if m < 3:
        raise InputError(f"lambda normalization needs m >= 3, got {m}")
    if tree is None:
        tree = build_arc_cotour_tree(m)
    n = m + 1
    ratio = Fraction(n - 3, n - 2)
    lambdas = []
    shift: dict[Arc, Fraction] = {}
    for root, t in zip(tree.roots, _reference_tours(tree)):
        lam = (ratio * tour_cost_quadratic(Qbar, t) - tour_cost_linear(f_tilde, t)) / m
        lambdas.append(lam)
        shift[root] = lam
    values = LinearCostMatrix.from_function(
        m, lambda i, j: f_tilde[i, j] + shift[tree.component[Arc(i, j)]]
    )
    return FCandidate(values, tuple(lambdas))


def base_case_linearize(Q: QuadraticCostMatrix) -> LinearCostMatrix:
    """On 3 nodes the two tours are arc-disjoint, so one arc of each carries its value."""
    if Q.n != 3:
        raise InputError(f"base case needs n = 3, got {Q.n}")
    plus = Tour((1, 2, 3))
    minus = Tour((1, 3, 2))
    return LinearCostMatrix.from_entries(
        3, {(1, 2): tour_cost_quadratic(Q, plus), (1, 3): tour_cost_quadratic(Q, minus)}
    )


def zero_border_normalize(C: LinearCostMatrix) -> LinearCostMatrix:
    """Equivalent linear matrix (same value on every tour) with zero row and column ``n``."""
    n = C.n
    if n < 4:
        raise InputError(f"zero-border normalization needs n >= 4, got {n}")
    alpha = sum((C[i, n] for i in range(1, n)), Fraction(0)) / (n - 2)
    beta = sum((C[n, i] for i in range(1, n)), Fraction(0)) / (n - 2)
    a = {i: -C[i, n] + beta for i in range(1, n)}
    b = {i: -C[n, i] + alpha for i in range(1, n)}
    a[n] = -alpha
    b[n] = -beta
    return LinearCostMatrix.from_function(n, lambda i, j: C[i, j] + a[i] + b[j])


def sufficient_row_cvp(Q: QuadraticCostMatrix) -> Optional[LinearCostMatrix]:
    """Cheap sufficient test: every row matrix has the CVP over tours through its own arc.

    Row ``(i, j)`` of ``Q`` read as a linear matrix ``R`` must be worth the
    same on every tour containing ``(i, j)``; that common value becomes
    ``l[i, j]``. ``None`` is inconclusive, not a negative verdict.
    """
    n = Q.n
    if n < 4:
        raise InputError(f"row-CVP test needs n >= 4, got {n}")
    rows: dict[Arc, dict] = defaultdict(dict)
    for (e, f), v in Q.cells.items():
        rows[e][f] = v
    lin = {}
    for a in all_arcs(n):
        grid = [[Fraction(0)] * n for _ in range(n)]
        for (u, v), value in rows.get(a, {}).items():
            grid[u - 1][v - 1] = value
        R = LinearCostMatrix(n, tuple(tuple(r) for r in grid))
        cert = kl_cvp_decompose(R, a.tail, a.head)
        if cert is None:
            return None
        lin[a] = cert.constant
    return LinearCostMatrix.from_entries(n, lin)


class _Stats:
    def __init__(self):
        self.timings: dict[str, float] = defaultdict(float)
        self.max_depth = 0

    def add(self, stage: str, started: float) -> None:
        self.timings[stage] += time.perf_counter() - started


def _not_linearizable(witness: Witness) -> LinearizationOutcome:
    return LinearizationOutcome(Verdict.NOT_LINEARIZABLE, witness=witness)


def linearize_reduced(QR: QuadraticCostMatrix) -> LinearizationOutcome:
    """Decide a matrix already in quadratic reduced form."""
    stats = _Stats()
    out = _linearize_reduced(QR, 0, stats)
    return LinearizationOutcome(out.verdict, out.linearization, out.witness, _stats_dict(QR.n, stats))


def _linearize_reduced(QR: QuadraticCostMatrix, depth: int, stats: _Stats) -> LinearizationOutcome:
    n = QR.n
    if n < 3:
        raise InputError(f"linearization needs n >= 3, got {n}")
    if not is_quadratic_reduced(QR):
        raise ValueError("linearize_reduced requires a matrix in quadratic reduced form")
    stats.max_depth = max(stats.max_depth, depth)
    if n == 3:
        return LinearizationOutcome(Verdict.LINEARIZABLE, base_case_linearize(QR))

    m = n - 1
    started = time.perf_counter()
    Qbar = QR.without_last_node()
    # the tree and closure checks are linear in Qbar, so run them on an
    # integer multiple of it and rescale whatever is reported
    scale = denominator_lcm(Qbar.cells.values())
    unscale = Fraction(1, scale)
    Qint = QuadraticCostMatrix._from_trusted(
        m, {c: (v * scale).numerator for c, v in Qbar.cells.items()}
    )
    tree = build_arc_cotour_tree(m)
    z = _z_matrices(Qint)
    f_tilde, failure = solve_f_tilde(tree, Qint, z)
    if failure is not None:
        stats.add("condition1_tree", started)
        child, par, diff = failure
        return _not_linearizable(
            Witness(
                "tree_pair", n, depth, (child, par), unscale * diff,
                detail="difference of Z matrices varies over tours through both arcs",
            )
        )
    F_scaled = normalize_lambda(Qint, f_tilde, tree).values
    F = unscale * F_scaled
    stats.add("condition1_tree", started)

    sub = _linearize(Qbar, depth + 1, stats, fast_path=False)
    if not sub.linearizable:
        return sub

    started = time.perf_counter()
    factor = Fraction(n - 2, n - 3)
    diff = sub.linearization - factor * F
    ok = has_zero_cvp(diff)
    stats.add("condition2", started)
    if not ok:
        return _not_linearizable(
            Witness(
                "condition2", n, depth, (), diff,
                detail="H - (n-2)/(n-3) F is not a zero-constant CVP matrix",
            )
        )

    # closure: 2 Z[a] - F/(n-3) must be worth f[a] on every tour through a;
    # multiplied through by (n-3) * scale * t to stay in integers
    started = time.perf_counter()
    t = denominator_lcm(x for row in F_scaled.values for x in row)
    F_int = [[int(x * t) for x in row] for row in F_scaled.values]
    z_coef = 2 * (n - 3) * t
    for a in tree.bfs_order:
        za = z[a].values
        M_int = LinearCostMatrix(
            m,
            tuple(
                tuple(z_coef * zv - fv for zv, fv in zip(zrow, frow))
                for zrow, frow in zip(za, F_int)
            ),
        )
        cert = kl_cvp_decompose(M_int, a.tail, a.head)
        if cert is None or cert.constant != (n - 3) * F_int[a.tail - 1][a.head - 1]:
            stats.add("condition1_closure", started)
            M_a = 2 * (unscale * z[a]) - Fraction(1, n - 3) * F
            return _not_linearizable(
                Witness(
                    "closure", n, depth, (a,), M_a, expected=F[a],
                    detail="2 Z[a] - F/(n-3) is not worth f[a] on every tour through a",
                )
            )
    stats.add("condition1_closure", started)

    C = LinearCostMatrix.from_function(n, lambda i, j: F[i, j] if i < n and j < n else 0)
    return LinearizationOutcome(Verdict.LINEARIZABLE, C)


def _linearize(Q: QuadraticCostMatrix, depth: int, stats: _Stats, fast_path: bool, strict: bool = False) -> LinearizationOutcome:
    started = time.perf_counter()
    Q, _ = normalize_structural_zeros(Q, strict=strict)
    if fast_path and Q.n >= 4:
        L = sufficient_row_cvp(Q)
        stats.add("fast_path", started)
        if L is not None:
            return LinearizationOutcome(Verdict.LINEARIZABLE, L)
        started = time.perf_counter()
    dec = qrf_decompose(Q)
    stats.add("qrf", started)
    out = _linearize_reduced(dec.reduced, depth, stats)
    if not out.linearizable:
        return out
    return LinearizationOutcome(Verdict.LINEARIZABLE, out.linearization + dec.linear)


def _stats_dict(n: int, stats: _Stats, **extra) -> dict:
    out = {
        "n": n,
        "recursion_depth": stats.max_depth,
        "timings": {k: stats.timings[k] for k in sorted(stats.timings)},
    }
    out.update(extra)
    return out


def linearize(
    Q: QuadraticCostMatrix,
    *,
    fast_path: bool = False,
    strict: bool = False,
) -> LinearizationOutcome:
    """Decide whether ``Q`` is linearizable and return a linearization if so.

    With ``fast_path`` the row-CVP sufficient test runs first and, when it
    succeeds, its linearization is returned directly. ``strict`` turns
    nonzero structurally null cells into an error instead of clearing them.
    """
    if Q.n < 3:
        raise InputError(f"linearization needs n >= 3, got {Q.n}")
    stats = _Stats()
    _, cleared = normalize_structural_zeros(Q, strict=strict)
    out = _linearize(Q, 0, stats, fast_path=fast_path, strict=strict)
    used_fast = fast_path and "qrf" not in stats.timings and out.linearizable
    return LinearizationOutcome(
        out.verdict,
        out.linearization,
        out.witness,
        _stats_dict(Q.n, stats, structural_zeros_cleared=cleared, fast_path_used=used_fast),
    )


def _random_tours(n: int, count: int, seed: int):
    rnd = random.Random(seed)
    rest = list(range(2, n + 1))
    for _ in range(count):
        rnd.shuffle(rest)
        yield Tour((1, *rest))


def verify_linearization(
    Q: QuadraticCostMatrix,
    C: LinearCostMatrix,
    mode: str = "auto",
    samples: int = DEFAULT_VERIFY_SAMPLES,
    seed: int = 0,
) -> Optional[Tour]:
    """Check ``Q[tour] == C(tour)``; returns a counterexample tour or ``None``.

    ``mode`` is ``"exhaustive"``, ``"sample"`` (``samples`` seeded random
    tours) or ``"auto"``: exhaustive up to ``n = 8``, sampled beyond. A sampled
    pass is a spot check only.
    """
    n = Q.n
    if mode == "auto":
        mode = "exhaustive" if n <= EXHAUSTIVE_VERIFY_MAX_N else "sample"
    if mode == "exhaustive":
        tours = (Tour((1,) + p) for p in itertools.permutations(range(2, n + 1)))
    elif mode == "sample":
        tours = _random_tours(n, samples, seed)
    else:
        raise InputError(f"unknown verification mode {mode!r}")
    for t in tours:
        if tour_cost_quadratic(Q, t) != tour_cost_linear(C, t):
            return t
    return None
