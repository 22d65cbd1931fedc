"""Seeded instance generators.

Each generator is a pure function of its arguments: the same family, size,
seed and parameters give the same instance. Linearizable families ship a
planted linearization, which is re-checked against the oracle up to
``CERTIFY_MAX_N`` nodes before the instance is returned.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from qtsplin.model import (
    Arc,
    InputError,
    LinearCostMatrix,
    QuadraticCostMatrix,
    all_arcs,
    diagonal_embedding,
    is_structural_zero,
    to_rational,
)
from qtsplin.oracle import brute_verify
from qtsplin.linearizer import cotour_adjacent

FAMILIES = ("diagonal", "tensor_sum", "row_cvp", "random", "perturbed", "equivalence_noise")
CERTIFY_MAX_N = 7
LOW, HIGH = -9, 9


@dataclass(frozen=True)
class GeneratedInstance:
    Q: QuadraticCostMatrix
    planted: Optional[LinearCostMatrix]
    family: str
    seed: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown family {self.family!r}")


def _certified(inst: GeneratedInstance) -> GeneratedInstance:
    if inst.planted is not None and inst.Q.n <= CERTIFY_MAX_N:
        if not brute_verify(inst.Q, inst.planted):
            raise RuntimeError(
                f"planted linearization of {inst.family} instance (n={inst.Q.n}, "
                f"seed={inst.seed}) fails the oracle"
            )
    return inst


def _require_n(n: int, minimum: int) -> None:
    if n < minimum:
        raise InputError(f"generator needs n >= {minimum}, got {n}")


def random_linear(n: int, seed: int) -> LinearCostMatrix:
    rnd = random.Random(seed)
    return LinearCostMatrix.from_function(n, lambda i, j: rnd.randint(LOW, HIGH))


def gen_diagonal_embedding(C: LinearCostMatrix, seed: int = 0) -> GeneratedInstance:
    """``q[e, e] = c[e]``; every tour picks up exactly its own arcs' diagonal cells."""
    _require_n(C.n, 3)
    return GeneratedInstance(diagonal_embedding(C), C.off_diagonal(), "diagonal", seed)


def gen_diagonal(n: int, seed: int) -> GeneratedInstance:
    return gen_diagonal_embedding(random_linear(n, seed), seed)


def gen_tensor_sum(n: int, seed: int) -> GeneratedInstance:
    """``q[(i,j),(k,l)] = a[i,j,k] + b[i,j,l] + d[i,k,l] + h[j,k,l]`` on non-null cells.

    On a tour each of the four terms sums to a linear cost: fixing arc
    ``(i, j)``, the tails ``k`` of the tour arcs run once over all nodes, and
    likewise for the heads. Null cells never lie on a tour, so clearing them
    leaves the planted ``c = alpha + beta + gamma + delta`` valid.
    """
    _require_n(n, 4)
    rnd = random.Random(seed)
    nodes = range(1, n + 1)
    A, B, D, H = (
        {(x, y, z): rnd.randint(LOW, HIGH) for x in nodes for y in nodes for z in nodes}
        for _ in range(4)
    )
    cells = {}
    for e in all_arcs(n):
        i, j = e
        for f in all_arcs(n):
            if is_structural_zero(e, f):
                continue
            k, l = f
            v = A[i, j, k] + B[i, j, l] + D[i, k, l] + H[j, k, l]
            if v:
                cells[e, f] = v
    planted = LinearCostMatrix.from_function(
        n,
        lambda i, j: sum(A[i, j, k] + B[i, j, k] + D[k, i, j] + H[k, i, j] for k in nodes),
    )
    return _certified(GeneratedInstance(QuadraticCostMatrix(n, cells), planted, "tensor_sum", seed))


def gen_row_cvp(n: int, seed: int) -> GeneratedInstance:
    """Every row ``(i, j)`` is a weak sum off row ``i`` and column ``j`` plus a free owner cell.

    Only tours through ``(i, j)`` read row ``(i, j)``, and on those the row is
    worth ``w + sum(a) + sum(b)``, which becomes ``l[i, j]``.
    """
    _require_n(n, 4)
    rnd = random.Random(seed)
    cells = {}
    lin = {}
    for e in all_arcs(n):
        i, j = e
        a = {u: rnd.randint(LOW, HIGH) for u in range(1, n + 1) if u != i}
        b = {v: rnd.randint(LOW, HIGH) for v in range(1, n + 1) if v != j}
        owner = rnd.randint(LOW, HIGH)
        if owner:
            cells[e, e] = owner
        for u in a:
            for v in b:
                if u != v and (u, v) != (j, i):
                    val = a[u] + b[v]
                    if val:
                        cells[e, Arc(u, v)] = val
        lin[e] = owner + sum(a.values()) + sum(b.values())
    planted = LinearCostMatrix.from_entries(n, lin)
    return _certified(GeneratedInstance(QuadraticCostMatrix(n, cells), planted, "row_cvp", seed))


def gen_equivalence_noise(inst: GeneratedInstance, seed: int) -> GeneratedInstance:
    """``mu Q + (1 - mu) Q^T + D + S`` with random rational ``mu``, diagonal ``D``, skew ``S``.

    Transposition and ``S`` leave every tour value alone and ``D`` adds
    ``d[e]`` per tour arc, so the planted linearization only gains ``d``.
    """
    if inst.planted is None:
        raise InputError("equivalence noise needs an instance with a planted linearization")
    Q = inst.Q
    n = Q.n
    rnd = random.Random(seed)
    mu = Fraction(rnd.randint(LOW, HIGH), rnd.randint(1, HIGH))
    d = {e: rnd.randint(LOW, HIGH) for e in all_arcs(n)}
    skew = {}
    arcs = all_arcs(n)
    for x, e in enumerate(arcs):
        for f in arcs[x + 1:]:
            if not is_structural_zero(e, f) and rnd.random() < 0.5:
                s = rnd.randint(LOW, HIGH)
                skew[e, f] = s
                skew[f, e] = -s
    noisy = mu * Q + (1 - mu) * Q.transpose()
    noisy = noisy + diagonal_embedding(LinearCostMatrix.from_entries(n, d))
    noisy = noisy + QuadraticCostMatrix(n, skew)
    planted = inst.planted + LinearCostMatrix.from_entries(n, d)
    return _certified(GeneratedInstance(noisy, planted, "equivalence_noise", seed))


def gen_random(n: int, seed: int, density: float | Fraction = Fraction(1, 2)) -> GeneratedInstance:
    """Independent integer values on non-null cells, each kept with probability ``density``."""
    _require_n(n, 4)
    density = float(density)
    if not 0 <= density <= 1:
        raise InputError(f"density must lie in [0, 1], got {density}")
    rnd = random.Random(seed)
    cells = {}
    for e in all_arcs(n):
        for f in all_arcs(n):
            if is_structural_zero(e, f):
                continue
            if rnd.random() < density:
                v = rnd.randint(LOW, HIGH)
                if v:
                    cells[e, f] = v
    return GeneratedInstance(QuadraticCostMatrix(n, cells), None, "random", seed)


def perturb_candidates(n: int) -> list[tuple[Arc, Arc]]:
    """Co-tour pairs ``e < f`` (dense order) of arcs that avoid node ``n``."""
    arcs = [a for a in all_arcs(n) if n not in a]
    return [
        (e, f)
        for x, e in enumerate(arcs)
        for f in arcs[x + 1:]
        if cotour_adjacent(e, f, n)
    ]


def perturb(inst: GeneratedInstance, epsilon, seed: int) -> GeneratedInstance:
    """Add ``epsilon`` to one symmetric cell pair ``(e, f)``, ``(f, e)``."""
    eps = to_rational(epsilon)
    if eps == 0:
        raise InputError("perturbation size must be nonzero")
    n = inst.Q.n
    pairs = perturb_candidates(n)
    if not pairs:
        raise InputError(f"no eligible cell pair to perturb on {n} nodes")
    e, f = random.Random(seed).choice(pairs)
    bump = QuadraticCostMatrix(n, {(e, f): eps, (f, e): eps})
    return GeneratedInstance(inst.Q + bump, None, "perturbed", seed)


def generate(
    family: str,
    n: int,
    seed: int,
    *,
    density: float | Fraction = Fraction(1, 2),
    epsilon=1,
    base: str = "diagonal",
) -> GeneratedInstance:
    """Dispatch by family name. ``base`` picks the family that is perturbed or noised."""
    if family == "diagonal":
        return gen_diagonal(n, seed)
    if family == "tensor_sum":
        return gen_tensor_sum(n, seed)
    if family == "row_cvp":
        return gen_row_cvp(n, seed)
    if family == "random":
        return gen_random(n, seed, density)
    if family in ("perturbed", "equivalence_noise"):
        if base not in ("diagonal", "tensor_sum", "row_cvp"):
            raise InputError(f"base family must be planted, got {base!r}")
        inner = generate(base, n, seed)
        if family == "perturbed":
            return perturb(inner, epsilon, seed)
        return gen_equivalence_noise(inner, seed)
    raise InputError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
