"""Brute-force ground truth by tour enumeration.

Everything here works from the definitions alone: tours are enumerated
explicitly and linearizability is decided by solving the tour incidence
system ``sum_{a in tour} c[a] = Q[tour]`` with exact Gaussian elimination.
None of it shares code with the linearizer beyond the data model.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from qtsplin.model import (
    Arc,
    InputError,
    LinearCostMatrix,
    QuadraticCostMatrix,
    Tour,
    arc_from_index,
    dense_index,
    tour_cost_linear,
    tour_cost_quadratic,
)

DEFAULT_CAP = 9


class EnumerationCapError(InputError):
    pass


def _check_cap(n: int, cap: int) -> None:
    if n < 3:
        raise InputError(f"tours need at least 3 nodes, got n={n}")
    if n > cap:
        raise EnumerationCapError(
            f"n={n} exceeds the enumeration cap of {cap} "
            f"({_factorial(n - 1)} tours); raise the cap explicitly if intended"
        )


def _factorial(k: int) -> int:
    out = 1
    for t in range(2, k + 1):
        out *= t
    return out


def enumerate_tours(n: int, cap: int = DEFAULT_CAP) -> list[Tour]:
    """All ``(n-1)!`` tours of the complete digraph, in lexicographic order."""
    _check_cap(n, cap)
    return [Tour((1,) + p) for p in itertools.permutations(range(2, n + 1))]


def tours_through(n: int, arcs: Iterable[tuple[int, int]], cap: int = DEFAULT_CAP) -> list[Tour]:
    required = [tuple(a) for a in arcs]
    return [t for t in enumerate_tours(n, cap) if all(a in t.arcs for a in required)]


def tour_insert_node(tour: Tour, arc: tuple[int, int]) -> Tour:
    """Replace ``arc = (i, j)`` of ``tour`` by the path ``i -> n+1 -> j``."""
    if tuple(arc) not in tour.arcs:
        raise InputError(f"arc {tuple(arc)} is not in tour {tour}")
    i, j = arc
    new = tour.n + 1
    order = list(tour.order)
    t = order.index(i)
    order.insert(t + 1, new)
    return Tour(tuple(order))


def tour_shortcut_node(tour: Tour) -> tuple[Tour, Arc]:
    """Remove the largest node ``n`` by joining its predecessor to its successor.

    Returns the shortened tour and the arc that replaced the detour.
    """
    n = tour.n
    if n < 4:
        raise InputError("shortcutting needs a tour on at least 4 nodes")
    order = list(tour.order)
    t = order.index(n)
    pred = order[t - 1]
    succ = order[(t + 1) % n]
    order.pop(t)
    return Tour(tuple(order)), Arc(pred, succ)


@dataclass(frozen=True)
class TourIncidenceSystem:
    """One row per tour, one column per arc (dense index), right-hand side ``Q[tour]``."""

    n: int
    tours: tuple[Tour, ...]
    rows: tuple[tuple[int, ...], ...]
    rhs: tuple[Fraction, ...]

    @classmethod
    def build(cls, Q: QuadraticCostMatrix, cap: int = DEFAULT_CAP) -> "TourIncidenceSystem":
        tours = tuple(enumerate_tours(Q.n, cap))
        rows = tuple(tuple(sorted(dense_index(a, Q.n) for a in t.arcs)) for t in tours)
        rhs = tuple(tour_cost_quadratic(Q, t) for t in tours)
        return cls(Q.n, tours, rows, rhs)

    def dense_rows(self) -> list[list[int]]:
        width = self.n * (self.n - 1)
        out = []
        for cols in self.rows:
            row = [0] * width
            for c in cols:
                row[c] = 1
            out.append(row)
        return out


def solve_exact(
    rows: Iterable[dict[int, Fraction]], rhs: Iterable[Fraction]
) -> Optional[dict[int, Fraction]]:
    """Solve a sparse linear system exactly; ``None`` when inconsistent.

    Rows are eliminated in the order given, each new pivot being its lowest
    remaining column. The basis is kept in reduced form, so the returned
    solution sets every free variable to zero.
    """
    basis: dict[int, tuple[dict[int, Fraction], Fraction]] = {}
    for raw, b in zip(rows, rhs):
        row = {c: Fraction(v) for c, v in raw.items() if v}
        b = Fraction(b)
        for col in [c for c in row if c in basis]:
            coef = row.get(col)
            if not coef:
                continue
            prow, pb = basis[col]
            for c, v in prow.items():
                s = row.get(c, 0) - coef * v
                if s:
                    row[c] = s
                else:
                    row.pop(c, None)
            b -= coef * pb
        if not row:
            if b != 0:
                return None
            continue
        pivot = min(row)
        scale = row[pivot]
        row = {c: v / scale for c, v in row.items()}
        b /= scale
        for col, (prow, pb) in list(basis.items()):
            coef = prow.get(pivot)
            if not coef:
                continue
            for c, v in row.items():
                s = prow.get(c, 0) - coef * v
                if s:
                    prow[c] = s
                else:
                    prow.pop(c, None)
            basis[col] = (prow, pb - coef * b)
        basis[pivot] = (row, b)
    return {col: pb for col, (_, pb) in basis.items()}


def brute_linearize(Q: QuadraticCostMatrix, cap: int = DEFAULT_CAP) -> Optional[LinearCostMatrix]:
    """A linearization of ``Q`` found by elimination on the tour incidence system, or ``None``."""
    system = TourIncidenceSystem.build(Q, cap)
    solution = solve_exact(
        ({c: Fraction(1) for c in cols} for cols in system.rows), system.rhs
    )
    if solution is None:
        return None
    return LinearCostMatrix.from_entries(
        Q.n, {arc_from_index(c, Q.n): v for c, v in solution.items()}
    )


def find_counterexample(
    Q: QuadraticCostMatrix, C: LinearCostMatrix, cap: int = DEFAULT_CAP
) -> Optional[Tour]:
    """First tour (lexicographic) with ``Q[tour] != C(tour)``, if any."""
    if Q.n != C.n:
        raise InputError(f"dimension mismatch: Q on {Q.n} nodes, C on {C.n}")
    for t in enumerate_tours(Q.n, cap):
        if tour_cost_quadratic(Q, t) != tour_cost_linear(C, t):
            return t
    return None


def brute_verify(Q: QuadraticCostMatrix, C: LinearCostMatrix, cap: int = DEFAULT_CAP) -> bool:
    return find_counterexample(Q, C, cap) is None


def _shared_value(values: Iterable[Fraction]) -> Optional[Fraction]:
    seen = set(values)
    if len(seen) == 1:
        return seen.pop()
    return None


def brute_cvp(M: LinearCostMatrix, cap: int = DEFAULT_CAP) -> Optional[Fraction]:
    """The common value of all tours under ``M``, or ``None`` if tours differ."""
    return _shared_value(tour_cost_linear(M, t) for t in enumerate_tours(M.n, cap))


def brute_kl_cvp(M: LinearCostMatrix, k: int, l: int, cap: int = DEFAULT_CAP) -> Optional[Fraction]:
    """The common value of all tours through arc ``(k, l)``, or ``None``."""
    return brute_fixed_arcs_cvp(M, [(k, l)], cap)


def brute_fixed_arcs_cvp(
    M: LinearCostMatrix, arcs: Iterable[tuple[int, int]], cap: int = DEFAULT_CAP
) -> Optional[Fraction]:
    """The common value of all tours containing every arc in ``arcs``.

    ``None`` when those tours disagree or when no tour contains them all.
    """
    return _shared_value(tour_cost_linear(M, t) for t in tours_through(M.n, arcs, cap))
