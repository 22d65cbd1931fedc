"""Constant value property (CVP) checks for linear cost matrices.

A matrix has the CVP when every tour has the same value. On the complete
digraph this happens exactly when it is a weak sum matrix,
``c[i, j] = a[i] + b[j]`` for ``i != j``, and then every tour is worth
``sum(a) + sum(b)``. The same idea, restricted to tours through one or more
fixed arcs, gives the (k, l)-CVP and the fixed-arc constants the linearizer
needs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from qtsplin.model import Arc, InputError, LinearCostMatrix


@dataclass(frozen=True)
class WeakSumCertificate:
    """``a`` and ``b`` hold ``a[i]``, ``b[i]`` at position ``i - 1``."""

    a: tuple[Fraction, ...]
    b: tuple[Fraction, ...]
    constant: Fraction


@dataclass(frozen=True)
class KlCvpCertificate:
    """Weak-sum form of a matrix off row ``k`` and column ``l``."""

    k: int
    l: int
    a: dict[int, Fraction]  # over N \ {k}
    b: dict[int, Fraction]  # over N \ {l}
    constant: Fraction


def solve_weak_sum(
    cells: Mapping[tuple[int, int], Fraction],
    rows: Sequence[int],
    cols: Sequence[int],
) -> Optional[tuple[dict[int, Fraction], dict[int, Fraction]]]:
    """Find ``a`` over ``rows`` and ``b`` over ``cols`` with ``a[u] + b[v] == cells[u, v]``.

    Values are propagated breadth-first over the bipartite row/column graph
    formed by ``cells``. Each connected component is gauged by setting ``a``
    of its lowest row to zero (a column with no cells gets ``b = 0``), then
    every cell is re-checked. Returns ``None`` if some cell disagrees.
    """
    by_row: dict[int, list[int]] = {u: [] for u in rows}
    by_col: dict[int, list[int]] = {v: [] for v in cols}
    for u, v in cells:
        by_row[u].append(v)
        by_col[v].append(u)
    for adj in (by_row, by_col):
        for lst in adj.values():
            lst.sort()

    a: dict[int, Fraction] = {}
    b: dict[int, Fraction] = {}
    for start in rows:
        if start in a:
            continue
        a[start] = 0
        queue = deque([("r", start)])
        while queue:
            side, x = queue.popleft()
            if side == "r":
                for v in by_row[x]:
                    if v not in b:
                        b[v] = cells[x, v] - a[x]
                        queue.append(("c", v))
            else:
                for u in by_col[x]:
                    if u not in a:
                        a[u] = cells[u, x] - b[x]
                        queue.append(("r", u))
    for v in cols:
        b.setdefault(v, 0)

    for (u, v), value in cells.items():
        if a[u] + b[v] != value:
            return None
    return a, b


def _require_nodes(M: LinearCostMatrix, minimum: int) -> None:
    if M.n < minimum:
        raise InputError(f"matrix on {M.n} nodes; at least {minimum} required")


def weak_sum_decompose(M: LinearCostMatrix) -> Optional[WeakSumCertificate]:
    """Weak-sum decomposition with gauge ``a[1] = 0``, or ``None`` if there is none.

    With that gauge the propagation is ``b[j] = m[1, j]``,
    ``a[i] = m[i, 2] - b[2]`` for ``i > 2``, ``a[2] = m[2, 3] - b[3]`` and
    ``b[1]`` from the first row that reaches column 1.
    """
    _require_nodes(M, 3)
    m = M.n
    nodes = list(range(1, m + 1))
    vals = M.values
    cells = {(i, j): vals[i - 1][j - 1] for i in nodes for j in nodes if i != j}
    solved = solve_weak_sum(cells, nodes, nodes)
    if solved is None:
        return None
    a, b = solved
    av = tuple(Fraction(a[i]) for i in nodes)
    bv = tuple(Fraction(b[i]) for i in nodes)
    return WeakSumCertificate(av, bv, sum(av, Fraction(0)) + sum(bv, Fraction(0)))


def cvp_constant(M: LinearCostMatrix) -> Optional[Fraction]:
    """The common tour value of ``M`` if it has the CVP, else ``None``."""
    cert = weak_sum_decompose(M)
    return None if cert is None else cert.constant


def has_zero_cvp(M: LinearCostMatrix) -> bool:
    return cvp_constant(M) == 0


def kl_cvp_decompose(M: LinearCostMatrix, k: int, l: int) -> Optional[KlCvpCertificate]:
    """Certificate that every tour through arc ``(k, l)`` has the same value.

    The weak-sum system is solved on rows ``N \\ {k}``, columns ``N \\ {l}``,
    leaving out the reverse cell ``(l, k)``, which no tour through ``(k, l)``
    can use. The common value is ``m[k, l] + sum(a) + sum(b)``. On 3 nodes
    exactly one tour contains ``(k, l)`` and its value is returned.
    """
    _require_nodes(M, 3)
    m = M.n
    if not (1 <= k <= m and 1 <= l <= m) or k == l:
        raise InputError(f"({k},{l}) is not an arc on {m} nodes")
    rows = [u for u in range(1, m + 1) if u != k]
    cols = [v for v in range(1, m + 1) if v != l]
    vals = M.values
    cells = {
        (u, v): vals[u - 1][v - 1]
        for u in rows
        for v in cols
        if u != v and (u, v) != (l, k)
    }
    solved = solve_weak_sum(cells, rows, cols)
    if solved is None:
        return None
    a = {u: Fraction(x) for u, x in solved[0].items()}
    b = {v: Fraction(x) for v, x in solved[1].items()}
    constant = M[k, l] + sum(a.values(), Fraction(0)) + sum(b.values(), Fraction(0))
    return KlCvpCertificate(k, l, a, b, constant)


def _chains(arcs: Sequence[tuple[int, int]], m: int) -> Optional[list[list[int]]]:
    """The node paths formed by ``arcs``; ``None`` if they cannot share a tour.

    A Hamiltonian cycle is returned as one path that starts and ends at the
    same node.
    """
    succ: dict[int, int] = {}
    pred: dict[int, int] = {}
    for i, j in arcs:
        if succ.get(i, j) != j or pred.get(j, i) != i:
            return None
        succ[i] = j
        pred[j] = i
    starts = [i for i in succ if i not in pred]
    paths = []
    covered = 0
    for s in sorted(starts):
        path = [s]
        while path[-1] in succ:
            path.append(succ[path[-1]])
        covered += len(path) - 1
        paths.append(path)
    if covered != len(succ):
        # leftover arcs form cycles; only a single Hamiltonian cycle is a tour
        if paths or len(succ) != m:
            return None
        path = [1]
        while len(path) <= m:
            path.append(succ[path[-1]])
        return [path] if path[-1] == 1 and len(set(path)) == m else None
    return paths


def contract_arcs(
    M: LinearCostMatrix, arcs: Iterable[tuple[int, int]]
) -> Optional[tuple[Fraction, list[tuple[int, int]], LinearCostMatrix | None]]:
    """Contract the paths formed by ``arcs`` into single nodes.

    Returns ``(base, nodes, contracted)``: ``base`` is the cost of the fixed
    arcs, ``nodes`` lists each contracted node as ``(entry, exit)`` (a plain
    node is ``(v, v)``), and ``contracted[x, y] = M[exit_x, entry_y]``. Tours
    through all of ``arcs`` correspond one-to-one to tours of the contracted
    matrix, with value ``base`` plus the contracted tour value. ``contracted``
    is ``None`` when fewer than two nodes remain. Returns ``None`` when no
    tour contains all of ``arcs``.
    """
    m = M.n
    arcs = [tuple(a) for a in arcs]
    paths = _chains(arcs, m)
    if paths is None:
        return None
    base = sum((M[a] for a in arcs), Fraction(0))
    if paths and paths[0][0] == paths[0][-1]:
        return base, [], None
    on_path = {v for p in paths for v in p}
    nodes = sorted([(p[0], p[-1]) for p in paths] + [(v, v) for v in range(1, m + 1) if v not in on_path])
    if len(nodes) < 2:
        return base, nodes, None
    size = len(nodes)
    vals = M.values
    grid = tuple(
        tuple(
            vals[nodes[x][1] - 1][nodes[y][0] - 1] if x != y else 0
            for y in range(size)
        )
        for x in range(size)
    )
    return base, nodes, LinearCostMatrix(size, grid)


def fixed_arcs_cvp_constant(
    M: LinearCostMatrix, arcs: Iterable[tuple[int, int]]
) -> Optional[Fraction]:
    """Common value of all tours of ``M`` containing every arc in ``arcs``.

    ``None`` when those tours take different values or when no tour contains
    all the arcs.
    """
    contracted = contract_arcs(M, arcs)
    if contracted is None:
        return None
    base, nodes, C = contracted
    if not nodes:
        return base
    if C is None:
        (entry, exit_), = nodes
        return base + M[exit_, entry]
    if C.n == 2:
        return base + C[1, 2] + C[2, 1]
    K = cvp_constant(C)
    return None if K is None else base + K
