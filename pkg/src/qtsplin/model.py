"""Core data model: arcs, tours, cost matrices and tour evaluation.

Node labels are 1-based throughout. A linear cost matrix is an ``n x n`` grid
whose diagonal is carried but never read by tour evaluation. A quadratic cost
matrix is stored sparsely as a mapping from ordered arc pairs to values, with
absent cells meaning zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Any, Callable, Iterable, Iterator, Mapping, NamedTuple, Optional

Rational = Fraction
Cell = tuple[tuple[int, int], tuple[int, int]]


class InputError(ValueError):
    """Malformed or out-of-range input."""


class StructuralZeroError(InputError):
    """A structurally null cell carries a nonzero value under strict mode."""

    def __init__(self, cell: Cell, value: Fraction):
        self.cell = cell
        self.value = value
        (i, j), (k, l) = cell
        super().__init__(
            f"structurally null cell q[({i},{j}),({k},{l})] = {value} is nonzero"
        )


def to_rational(value: Any) -> Fraction:
    """Convert ``value`` to an exact rational.

    Accepts ints, Fractions and strings such as ``"3"``, ``"-7/4"``. Floats and
    bools are rejected since they cannot be trusted to be exact.
    """
    if isinstance(value, bool):
        raise InputError(f"boolean is not a rational value: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text or any(c in text for c in ".eE"):
            raise InputError(f"not an exact rational string: {value!r}")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not an exact rational string: {value!r}") from exc
    raise InputError(f"unsupported rational value {value!r} of type {type(value).__name__}")


def _scalar(value: Any) -> int | Fraction:
    # integral scalars stay ints so integer matrices stay on fast int arithmetic
    v = to_rational(value)
    return v.numerator if v.denominator == 1 else v


def denominator_lcm(values: Iterable[int | Fraction]) -> int:
    """Least common multiple of the denominators of ``values`` (1 for none)."""
    out = 1
    for v in values:
        d = v.denominator
        if d != 1:
            out = math.lcm(out, d)
    return out


def format_rational(value: Fraction | int) -> str:
    """Canonical string: ``"p/q"`` with ``q > 0``, or ``"p"`` when ``q == 1``."""
    return str(Fraction(value))


class Arc(NamedTuple):
    tail: int
    head: int

    def __str__(self) -> str:
        return f"({self.tail},{self.head})"


def check_arc(arc: tuple[int, int], n: int) -> None:
    i, j = arc
    if not (1 <= i <= n and 1 <= j <= n):
        raise InputError(f"arc ({i},{j}) out of range for n={n}")
    if i == j:
        raise InputError(f"loop arc ({i},{i}) is not an arc")


def dense_index(arc: tuple[int, int], n: int) -> int:
    """Row-major position of ``arc`` among the ``n(n-1)`` arcs, skipping ``j == i``."""
    check_arc(arc, n)
    i, j = arc
    return (i - 1) * (n - 1) + (j - 1 if j < i else j - 2)


def arc_from_index(index: int, n: int) -> Arc:
    """Inverse of :func:`dense_index`."""
    if not 0 <= index < n * (n - 1):
        raise InputError(f"dense index {index} out of range for n={n}")
    row, col = divmod(index, n - 1)
    i = row + 1
    j = col + 1 if col + 1 < i else col + 2
    return Arc(i, j)


def all_arcs(n: int) -> list[Arc]:
    """All arcs of the complete digraph on ``n`` nodes in dense-index order."""
    return [Arc(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]


def is_structural_zero(e: tuple[int, int], f: tuple[int, int]) -> bool:
    """True when arcs ``e`` and ``f`` can never appear together in a tour.

    That is: shared tail with different heads, shared head with different
    tails, or ``f`` is the reverse of ``e``. The diagonal ``e == f`` is not null.
    """
    i, j = e
    k, l = f
    return (i == k and j != l) or (i != k and j == l) or (i == l and j == k)


@dataclass(frozen=True)
class Tour:
    """A Hamiltonian directed cycle, stored rotated so that it starts at node 1."""

    order: tuple[int, ...]
    arcs: tuple[Arc, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        order = tuple(int(v) for v in self.order)
        n = len(order)
        if n < 3:
            raise InputError(f"a tour needs at least 3 nodes, got {n}")
        if sorted(order) != list(range(1, n + 1)):
            raise InputError(f"tour {order} is not a permutation of 1..{n}")
        start = order.index(1)
        order = order[start:] + order[:start]
        object.__setattr__(self, "order", order)
        object.__setattr__(
            self, "arcs", tuple(Arc(order[t], order[(t + 1) % n]) for t in range(n))
        )

    @property
    def n(self) -> int:
        return len(self.order)

    def __contains__(self, arc: object) -> bool:
        return arc in self.arcs

    def successor(self, node: int) -> int:
        t = self.order.index(node)
        return self.order[(t + 1) % self.n]

    def __str__(self) -> str:
        return "->".join(map(str, self.order + self.order[:1]))


@dataclass(frozen=True)
class LinearCostMatrix:
    """An ``n x n`` matrix ``C`` with tour value ``C(tour) = sum of c[i, j]`` over tour arcs.

    Indexing uses 1-based node labels: ``C[i, j]``. Entries are exact
    rationals; the public constructors store :class:`~fractions.Fraction`,
    while internal integer-scaled computations may hold plain ``int``.
    """

    n: int
    values: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if len(self.values) != self.n or any(len(row) != self.n for row in self.values):
            raise InputError(f"linear cost matrix must be {self.n}x{self.n}")

    @classmethod
    def zeros(cls, n: int) -> "LinearCostMatrix":
        row = (Fraction(0),) * n
        return cls(n, (row,) * n)

    @classmethod
    def from_function(cls, n: int, fn: Callable[[int, int], Any]) -> "LinearCostMatrix":
        """Build from ``fn(i, j)`` on off-diagonal cells; the diagonal is zero."""
        return cls(
            n,
            tuple(
                tuple(
                    to_rational(fn(i, j)) if i != j else Fraction(0)
                    for j in range(1, n + 1)
                )
                for i in range(1, n + 1)
            ),
        )

    @classmethod
    def from_entries(cls, n: int, entries: Mapping[tuple[int, int], Any]) -> "LinearCostMatrix":
        grid = [[Fraction(0)] * n for _ in range(n)]
        for arc, value in entries.items():
            check_arc(arc, n)
            grid[arc[0] - 1][arc[1] - 1] = to_rational(value)
        return cls(n, tuple(tuple(row) for row in grid))

    def __getitem__(self, arc: tuple[int, int]) -> Fraction:
        return self.values[arc[0] - 1][arc[1] - 1]

    def entries(self) -> Iterator[tuple[Arc, Fraction]]:
        """Nonzero off-diagonal cells in dense-index order."""
        for i in range(1, self.n + 1):
            row = self.values[i - 1]
            for j in range(1, self.n + 1):
                if i != j and row[j - 1]:
                    yield Arc(i, j), row[j - 1]

    def off_diagonal(self) -> "LinearCostMatrix":
        """Copy with the (irrelevant) diagonal cleared."""
        return LinearCostMatrix.from_function(self.n, lambda i, j: self[i, j])

    def same_off_diagonal(self, other: "LinearCostMatrix") -> bool:
        return self.n == other.n and all(
            self[a] == other[a] for a in all_arcs(self.n)
        )

    def _combine(self, other: "LinearCostMatrix", op) -> "LinearCostMatrix":
        if not isinstance(other, LinearCostMatrix):
            return NotImplemented
        if other.n != self.n:
            raise InputError(f"dimension mismatch: {self.n} vs {other.n}")
        return LinearCostMatrix(
            self.n,
            tuple(
                tuple(op(x, y) for x, y in zip(r1, r2))
                for r1, r2 in zip(self.values, other.values)
            ),
        )

    def __add__(self, other):
        return self._combine(other, lambda x, y: x + y)

    def __sub__(self, other):
        return self._combine(other, lambda x, y: x - y)

    def __neg__(self):
        return self * -1

    def __mul__(self, scalar):
        s = _scalar(scalar)
        return LinearCostMatrix(self.n, tuple(tuple(s * x for x in row) for row in self.values))

    __rmul__ = __mul__


class QuadraticCostMatrix:
    """Sparse quadratic cost matrix ``Q`` indexed by ordered arc pairs.

    ``Q[e, f]`` returns the cell value (zero when absent). Zero values are
    never stored. Instances are treated as immutable.
    """

    __slots__ = ("n", "_cells")

    def __init__(self, n: int, cells: Mapping[Cell, Any] | None = None, *, _trusted: bool = False):
        if n < 2:
            raise InputError(f"node count must be at least 2, got {n}")
        self.n = n
        if _trusted:
            self._cells = cells  # type: ignore[assignment]
            return
        store: dict[Cell, Fraction] = {}
        for (e, f), value in (cells or {}).items():
            check_arc(e, n)
            check_arc(f, n)
            v = to_rational(value)
            if v:
                store[(Arc(*e), Arc(*f))] = v
        self._cells = store

    @classmethod
    def zeros(cls, n: int) -> "QuadraticCostMatrix":
        return cls(n, {})

    @classmethod
    def _from_trusted(cls, n: int, cells: dict) -> "QuadraticCostMatrix":
        # caller guarantees valid Arc keys and nonzero Fraction values
        return cls(n, cells, _trusted=True)

    @property
    def cells(self) -> Mapping[Cell, Fraction]:
        return MappingProxyType(self._cells)

    @property
    def dimension(self) -> int:
        return self.n * (self.n - 1)

    def __getitem__(self, cell: Cell) -> Fraction:
        return self._cells.get(cell, Fraction(0))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuadraticCostMatrix):
            return NotImplemented
        return self.n == other.n and self._cells == other._cells

    def __hash__(self):
        return hash((self.n, frozenset(self._cells.items())))

    def __repr__(self) -> str:
        return f"QuadraticCostMatrix(n={self.n}, nonzeros={len(self._cells)})"

    def items(self) -> Iterable[tuple[Cell, Fraction]]:
        """Nonzero cells sorted by dense index of row arc, then column arc."""
        n = self.n
        return sorted(
            self._cells.items(),
            key=lambda kv: (dense_index(kv[0][0], n), dense_index(kv[0][1], n)),
        )

    def structural_nonzeros(self) -> list[Cell]:
        return [c for c in self._cells if is_structural_zero(*c)]

    @property
    def is_normalized(self) -> bool:
        """True when every structurally null cell is zero."""
        return not any(is_structural_zero(*c) for c in self._cells)

    def transpose(self) -> "QuadraticCostMatrix":
        return QuadraticCostMatrix._from_trusted(
            self.n, {(f, e): v for (e, f), v in self._cells.items()}
        )

    def __add__(self, other: "QuadraticCostMatrix") -> "QuadraticCostMatrix":
        if not isinstance(other, QuadraticCostMatrix):
            return NotImplemented
        if other.n != self.n:
            raise InputError(f"dimension mismatch: {self.n} vs {other.n}")
        out = dict(self._cells)
        for c, v in other._cells.items():
            s = out.get(c, 0) + v
            if s:
                out[c] = s
            else:
                out.pop(c, None)
        return QuadraticCostMatrix._from_trusted(self.n, out)

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar) -> "QuadraticCostMatrix":
        s = _scalar(scalar)
        if not s:
            return QuadraticCostMatrix.zeros(self.n)
        return QuadraticCostMatrix._from_trusted(
            self.n, {c: s * v for c, v in self._cells.items()}
        )

    __rmul__ = __mul__

    def dense(self) -> list[list[Fraction]]:
        """Dense ``n(n-1) x n(n-1)`` view in dense-index order."""
        size = self.dimension
        grid = [[Fraction(0)] * size for _ in range(size)]
        for (e, f), v in self._cells.items():
            grid[dense_index(e, self.n)][dense_index(f, self.n)] = v
        return grid

    def without_last_node(self) -> "QuadraticCostMatrix":
        """Principal submatrix on arcs avoiding node ``n``, as an ``(n-1)``-node matrix."""
        n = self.n
        return QuadraticCostMatrix._from_trusted(
            n - 1,
            {
                (e, f): v
                for (e, f), v in self._cells.items()
                if n not in e and n not in f
            },
        )


def diagonal_embedding(C: LinearCostMatrix) -> QuadraticCostMatrix:
    """``Q`` with ``q[e, e] = c[e]`` and nothing else, so that ``Q[tour] = C(tour)``."""
    return QuadraticCostMatrix._from_trusted(C.n, {(a, a): v for a, v in C.entries()})


def normalize_structural_zeros(
    Q: QuadraticCostMatrix, strict: bool = False
) -> tuple[QuadraticCostMatrix, int]:
    """Clear structurally null cells, returning the cleaned matrix and how many were cleared.

    With ``strict`` any nonzero null cell raises :class:`StructuralZeroError`
    naming the first offending cell in dense order.
    """
    bad = Q.structural_nonzeros()
    if not bad:
        return Q, 0
    if strict:
        n = Q.n
        first = min(bad, key=lambda c: (dense_index(c[0], n), dense_index(c[1], n)))
        raise StructuralZeroError(first, Q[first])
    dropped = set(bad)
    kept = {c: v for c, v in Q.cells.items() if c not in dropped}
    return QuadraticCostMatrix._from_trusted(Q.n, kept), len(bad)


def _check_dims(n_matrix: int, tour: Tour) -> None:
    if n_matrix != tour.n:
        raise InputError(f"dimension mismatch: matrix on {n_matrix} nodes, tour on {tour.n}")


def tour_cost_linear(C: LinearCostMatrix, tour: Tour) -> Fraction:
    _check_dims(C.n, tour)
    rows = C.values
    return sum((rows[i - 1][j - 1] for i, j in tour.arcs), Fraction(0))


def tour_cost_quadratic(Q: QuadraticCostMatrix, tour: Tour) -> Fraction:
    """Sum of ``q[e, f]`` over all ordered pairs of tour arcs, ``e == f`` included."""
    _check_dims(Q.n, tour)
    cells = Q._cells
    arcs = tour.arcs
    total = Fraction(0)
    if len(cells) < len(arcs) ** 2:
        present = set(arcs)
        for (e, f), v in cells.items():
            if e in present and f in present:
                total += v
        return total
    for e in arcs:
        for f in arcs:
            v = cells.get((e, f))
            if v:
                total += v
    return total


class Verdict(str, enum.Enum):
    LINEARIZABLE = "linearizable"
    NOT_LINEARIZABLE = "not_linearizable"


@dataclass(frozen=True)
class Witness:
    """Evidence that a matrix is not linearizable.

    ``kind`` is one of:

    * ``"tree_pair"``: the difference ``matrix = Z[a] - Z[b]`` of two
      co-tour arcs ``arcs = (a, b)`` takes more than one value over the tours
      of the ``level - 1`` node subproblem that contain both arcs;
    * ``"condition2"``: ``matrix = H - (n-2)/(n-3) F`` on ``level - 1``
      nodes is not a constant-value matrix with constant zero;
    * ``"closure"``: for the arc ``arcs = (a,)``, the matrix
      ``2 Z[a] - F/(n-3)`` does not take the constant value ``expected`` over
      the tours through ``a``.

    ``level`` is the node count of the reduced matrix being tested and
    ``depth`` counts recursion steps from the caller's instance.
    """

    kind: str
    level: int
    depth: int
    arcs: tuple[Arc, ...]
    matrix: Optional[LinearCostMatrix] = None
    expected: Optional[Fraction] = None
    detail: str = ""

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "kind": self.kind,
            "level": self.level,
            "depth": self.depth,
            "arcs": [[a.tail, a.head] for a in self.arcs],
            "detail": self.detail,
        }
        if self.expected is not None:
            out["expected"] = format_rational(self.expected)
        return out


@dataclass(frozen=True)
class LinearizationOutcome:
    verdict: Verdict
    linearization: Optional[LinearCostMatrix] = None
    witness: Optional[Witness] = None
    stats: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if (self.verdict is Verdict.LINEARIZABLE) != (self.linearization is not None):
            raise ValueError("a linearization must be present exactly when linearizable")
        if (self.verdict is Verdict.NOT_LINEARIZABLE) != (self.witness is not None):
            raise ValueError("a witness must be present exactly when not linearizable")

    @property
    def linearizable(self) -> bool:
        return self.verdict is Verdict.LINEARIZABLE
