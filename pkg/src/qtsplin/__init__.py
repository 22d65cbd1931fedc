"""Linearization of quadratic traveling salesman cost matrices.

Decides whether a quadratic TSP cost matrix ``Q`` on the complete digraph
admits a linear cost matrix ``C`` with ``Q[tour] == C(tour)`` for every tour,
and builds such a ``C`` when it does. All arithmetic is exact.
"""

from qtsplin.model import (
    Arc,
    LinearCostMatrix,
    LinearizationOutcome,
    QuadraticCostMatrix,
    Tour,
    Witness,
    dense_index,
    arc_from_index,
    normalize_structural_zeros,
    tour_cost_linear,
    tour_cost_quadratic,
)
from qtsplin.reduction import QrfDecomposition, qrf_decompose, is_quadratic_reduced
from qtsplin.linearizer import linearize, linearize_reduced, sufficient_row_cvp

__all__ = [
    "Arc",
    "LinearCostMatrix",
    "LinearizationOutcome",
    "QuadraticCostMatrix",
    "QrfDecomposition",
    "Tour",
    "Witness",
    "arc_from_index",
    "dense_index",
    "is_quadratic_reduced",
    "linearize",
    "linearize_reduced",
    "normalize_structural_zeros",
    "qrf_decompose",
    "sufficient_row_cvp",
    "tour_cost_linear",
    "tour_cost_quadratic",
]

__version__ = "0.1.0"
