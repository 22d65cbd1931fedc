"""Decomposition of a quadratic cost matrix into quadratic reduced form.

A matrix is in quadratic reduced form (QRF) when it is symmetric, has a zero
diagonal, and every row and column indexed by an arc touching the last node
``n`` is zero. :func:`qrf_decompose` splits any ``Q`` into such a matrix and a
linear matrix ``L`` with ``Q[tour] = Q_R[tour] + L(tour)`` on every tour.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from qtsplin.model import (
    Arc,
    InputError,
    LinearCostMatrix,
    QuadraticCostMatrix,
    all_arcs,
    denominator_lcm,
    is_structural_zero,
    normalize_structural_zeros,
)


@dataclass(frozen=True)
class QrfDecomposition:
    reduced: QuadraticCostMatrix
    linear: LinearCostMatrix


def qrf_decompose(Q: QuadraticCostMatrix) -> QrfDecomposition:
    """Split ``Q`` into ``(Q_R, L)`` with ``Q_R`` in reduced form.

    Cells with a repeated node (not an arc) or structurally null cells count
    as zero wherever the construction refers to them. Structurally null cells
    of the result are left at zero, which changes no tour value.
    """
    n = Q.n
    if n < 3:
        raise InputError(f"QRF decomposition needs n >= 3, got {n}")
    Q, _ = normalize_structural_zeros(Q)
    # every output is linear in Q, so work on an integer multiple and divide once
    scale = denominator_lcm(Q.cells.values())
    cells = {c: (v * scale).numerator for c, v in Q.cells.items()}
    get = cells.get
    arcs = all_arcs(n)
    inner = [a for a in arcs if n not in a]
    into_n = {i: Arc(i, n) for i in range(1, n)}
    out_of_n = {j: Arc(n, j) for j in range(1, n)}

    # h[r][f] = q[r, (k,l)] - q[r, (k,n)] - q[r, (n,l)] for f = (k, l) avoiding n
    needed_rows = inner + list(into_n.values()) + list(out_of_n.values())
    h: dict[Arc, list] = {}
    for r in needed_rows:
        h[r] = [
            get((r, f), 0) - get((r, into_n[f[0]]), 0) - get((r, out_of_n[f[1]]), 0)
            for f in inner
        ]

    tilde: dict[tuple[Arc, Arc], int] = {}
    for e in inner:
        he, hi, hj = h[e], h[into_n[e[0]]], h[out_of_n[e[1]]]
        for t, f in enumerate(inner):
            v = he[t] - hi[t] - hj[t]
            if v:
                tilde[e, f] = v

    reduced: dict[tuple[Arc, Arc], Fraction] = {}
    for (e, f), v in tilde.items():
        if e == f or is_structural_zero(e, f):
            continue
        s = Fraction(v + tilde.get((f, e), 0), 2 * scale)
        if s:
            reduced[e, f] = s
            reduced[f, e] = s

    lin = {}
    for a in arcs:
        i, j = a
        total = 0
        for k in range(1, n):
            kn, nk = (k, n), (n, k)
            total += (
                get((a, kn), 0)
                + get((a, nk), 0)
                + get((kn, a), 0)
                - get((kn, (i, n)), 0)
                - get((kn, (n, j)), 0)
                + get((nk, a), 0)
                - get((nk, (i, n)), 0)
                - get((nk, (n, j)), 0)
            )
        lin[a] = Fraction(total + tilde.get((a, a), 0), scale)

    return QrfDecomposition(
        QuadraticCostMatrix._from_trusted(n, reduced),
        LinearCostMatrix.from_entries(n, lin),
    )


def is_quadratic_reduced(Q: QuadraticCostMatrix) -> bool:
    n = Q.n
    for (e, f), v in Q.cells.items():
        if e == f or n in e or n in f:
            return False
        if Q[f, e] != v:
            return False
    return True
