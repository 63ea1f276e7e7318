"""Partial-sum feasibility of weights against a spectrum, and the frame inequality."""

import logging
import math
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import BadDimension, EmptyInput, InvalidWeights
from .models import DEFAULT_TOLERANCES, FeasibilityReport, Tolerances, WeightSequence


logger = logging.getLogger(__name__)

__all__ = [
    "WeightSequence", "FeasibilityReport", "FrameInequality",
    "check_finite", "check_ffi", "converse_bound", "nonzero_eigenvalues",
]


class FrameInequality(NamedTuple):
    """Result of the fundamental frame inequality test."""
    satisfied: bool
    frame_bound: float


def nonzero_eigenvalues(b: Sequence[float], tolerances: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Eigenvalues sorted nonincreasing with numerically zero entries stripped."""
    values = np.asarray(b, dtype=float).ravel()
    if values.size == 0:
        raise EmptyInput("Eigenvalue list is empty")
    if not np.all(np.isfinite(values)):
        raise InvalidWeights("Eigenvalues must be finite")
    values = np.sort(values)[::-1]
    cutoff = tolerances.rank_tolerance(float(np.max(np.abs(values))))
    if values[-1] < -cutoff:
        raise InvalidWeights(f"Eigenvalue {values[-1]:.6g} is negative")
    return values[values > cutoff]


def converse_bound(b: Sequence[float], p: int) -> float:
    """Largest trace of PBP over rank-p projections P: the sum of the p largest eigenvalues."""
    values = sorted((float(x) for x in b), reverse=True)
    return math.fsum(values[:p])


def check_finite(
    b: Sequence[float],
    c: Union[WeightSequence, Sequence[float]],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    tau_sum: Optional[float] = None,
) -> FeasibilityReport:
    """Decide whether ``c`` admits a rank-one decomposition of an operator with eigenvalues ``b``.

    The weights are sorted internally, so ``violating_p`` refers to the
    nonincreasing order. ``tau_sum`` defaults to ``tolerances.sums * max(sum(b), 1)``.
    """
    weights = c if isinstance(c, WeightSequence) else WeightSequence(tuple(c))
    eig = nonzero_eigenvalues(b, tolerances)
    if eig.size == 0:
        raise EmptyInput("Operator has no nonzero eigenvalues")

    n = int(eig.size)
    k = len(weights)
    eig_total = math.fsum(eig)
    tau = tolerances.sum_tolerance(eig_total) if tau_sum is None else tau_sum
    sum_gap = weights.total - eig_total
    count_ok = k >= n

    sorted_c = np.zeros(max(n, k))
    sorted_c[:k] = weights.sorted_weights
    partial_c = np.cumsum(sorted_c)
    partial_b = np.cumsum(eig)

    violating_p = None
    partial_weight_sum = partial_eigen_sum = None
    for p in range(1, n):
        if partial_c[p - 1] > partial_b[p - 1] + tau:
            violating_p = p
            partial_weight_sum = float(partial_c[p - 1])
            partial_eigen_sum = converse_bound(eig, p)
            break

    feasible = count_ok and abs(sum_gap) <= tau and violating_p is None
    report = FeasibilityReport(
        feasible=feasible,
        violating_p=violating_p,
        sum_gap=float(sum_gap),
        count_ok=count_ok,
        tolerance=float(tau),
        partial_weight_sum=partial_weight_sum,
        partial_eigen_sum=partial_eigen_sum,
    )
    logger.debug(f"Feasibility of {k} weights against rank {n}: {report.describe()}")
    return report


def check_ffi(
    a: Sequence[float],
    n: int,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> FrameInequality:
    """Fundamental frame inequality max(a_i^2) <= (1/n) sum(a_i^2) for a tight frame of R^n."""
    squares = WeightSequence.from_norms(a)
    if n < 1:
        raise BadDimension(f"Dimension must be positive, got {n}")
    if len(squares) < n:
        raise BadDimension(f"{len(squares)} vectors cannot form a frame for dimension {n}")

    frame_bound = squares.total / n
    largest = squares.sorted_weights[0]
    satisfied = largest <= frame_bound + tolerances.sum_tolerance(squares.total)
    return FrameInequality(satisfied=satisfied, frame_bound=frame_bound)
