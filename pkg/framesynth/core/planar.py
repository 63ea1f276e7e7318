"""Rank-one decompositions in the plane from closed polygons.

For B = diag(b1, b2) and weights c_i, unit vectors x_i = (cos t_i, sin t_i)
decompose B exactly when the steps c_i * (cos 2t_i, sin 2t_i) add up to
(b1 - b2, 0). Appending the side b1 - b2 reversed turns this into closing a
polygon with prescribed side lengths, which is done by inscribing the sides
in a circle and solving for the circumradius.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import EmptyInput, Infeasible, InvalidWeights, NoPolygon, NumericalBreakdown, PreconditionViolated
from .models import DEFAULT_TOLERANCES, FeasibilityReport, RankOneDecomposition, Tolerances, WeightSequence


logger = logging.getLogger(__name__)


def _polar2cartesian(r: float, theta: float) -> np.ndarray:
    return r * np.array([np.cos(theta), np.sin(theta)])


@dataclass(frozen=True)
class PolygonSolution:
    """Half-headings of the weight sides of a closed polygon.

    ``sides`` lists the weights followed by the gap side when it is nonzero.
    """
    angles: Tuple[float, ...]
    sides: Tuple[float, ...]
    closure_residual: float

    def unit_vectors(self) -> np.ndarray:
        """Rows (cos t_i, sin t_i), one per weight side."""
        return np.array([_polar2cartesian(1.0, theta) for theta in self.angles]).reshape(-1, 2)


def _central_angle(radius: float, length: float) -> float:
    return 2.0 * math.asin(min(1.0, length / (2.0 * radius)))


def _flat_headings(sides: Sequence[float], longest: int) -> List[float]:
    return [0.0 if i == longest else math.pi for i in range(len(sides))]


def _cyclic_headings(sides: Sequence[float], longest: int, tolerances: Tolerances) -> List[float]:
    """Headings of the sides inscribed in a circle, walked counterclockwise.

    When the longest side subtends less than the others combined at the
    smallest radius, the centre lies outside the polygon and the longest
    chord is walked backwards.
    """
    ell = sides[longest]
    others = [l for i, l in enumerate(sides) if i != longest]
    r0 = ell / 2.0
    reflex = math.pi + math.fsum(_central_angle(r0, l) for l in others) < 2.0 * math.pi

    def excess(radius: float) -> float:
        spread = math.fsum(_central_angle(radius, l) for l in others)
        if reflex:
            return spread - _central_angle(radius, ell)
        return 2.0 * math.pi - spread - _central_angle(radius, ell)

    lo = hi = r0
    for _ in range(tolerances.bisection_max_iter):
        hi *= 2.0
        if excess(hi) > 0:
            break
    else:
        raise NumericalBreakdown("Could not bracket the circumradius")

    for _ in range(tolerances.bisection_max_iter):
        if hi - lo <= tolerances.bisection * hi:
            break
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if excess(mid) > 0:
            hi = mid
        else:
            lo = mid
    radius = 0.5 * (lo + hi)
    logger.debug(f"Circumradius {radius:.12g} ({'centre outside' if reflex else 'centre inside'})")

    headings = []
    beta = 0.0
    for i, length in enumerate(sides):
        sign = -1.0 if reflex and i == longest else 1.0
        alpha = sign * _central_angle(radius, length)
        headings.append(beta + alpha / 2.0 + sign * math.pi / 2.0)
        beta += alpha
    return headings


def _closure_residual(weights: Sequence[float], angles: Sequence[float], gap: float) -> float:
    total = np.zeros(2)
    for w, theta in zip(weights, angles):
        total += _polar2cartesian(w, 2.0 * theta)
    return float(np.linalg.norm(total - np.array([gap, 0.0])))


def polygon_angles(
    c: Sequence[float],
    gap: float,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    slack: Optional[float] = None,
) -> PolygonSolution:
    """Angles t_i with sum c_i (cos 2t_i, sin 2t_i) = (gap, 0).

    ``slack`` is how far the longest side may exceed the sum of the others
    before the polygon is rejected; it defaults to the partial-sum tolerance
    of the perimeter. Nearly degenerate polygons are laid out flat.
    """
    lengths = [float(x) for x in c]
    if not lengths:
        raise EmptyInput("No side lengths given")
    if any(not (l > 0 and math.isfinite(l)) for l in lengths):
        raise InvalidWeights("Side lengths must be positive and finite")
    if not (gap >= 0 and math.isfinite(gap)):
        raise InvalidWeights(f"Gap side must be nonnegative, got {gap}")

    sides = lengths + ([float(gap)] if gap > 0 else [])
    perimeter = math.fsum(sides)
    slack = tolerances.sum_tolerance(perimeter) if slack is None else slack
    longest = max(range(len(sides)), key=sides.__getitem__)
    rest = math.fsum(l for i, l in enumerate(sides) if i != longest)
    if len(sides) < 2 or sides[longest] > rest + slack:
        raise NoPolygon(f"Side {sides[longest]:.12g} is longer than the other sides combined ({rest:.12g})")

    flat = rest - sides[longest] <= tolerances.closure_tolerance(perimeter)
    headings = _flat_headings(sides, longest) if flat else _cyclic_headings(sides, longest, tolerances)
    if gap > 0:
        # The gap side is walked backwards along the x-axis.
        turn = math.pi - headings[-1]
        headings = [h + turn for h in headings]

    angles = tuple(math.remainder(h, 2.0 * math.pi) / 2.0 for h in headings[:len(lengths)])
    residual = _closure_residual(lengths, angles, gap)
    if not flat and residual > tolerances.closure_tolerance(perimeter):
        raise NumericalBreakdown(f"Polygon closure residual {residual:.3e} exceeds tolerance")
    return PolygonSolution(angles=angles, sides=tuple(sides), closure_residual=residual)


def decompose_2d(
    b1: float,
    b2: float,
    c: Union[WeightSequence, Sequence[float]],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> RankOneDecomposition:
    """Decompose diag(b1, b2) with the given weights through a closing polygon.

    Feasibility is decided by the trace and by whether the polygon closes,
    not by the partial-sum test, so the two can be checked against each other.
    """
    if not (math.isfinite(b1) and math.isfinite(b2) and b1 >= b2 > 0):
        raise PreconditionViolated(f"Need b1 >= b2 > 0, got ({b1}, {b2})")
    weights = c if isinstance(c, WeightSequence) else WeightSequence(tuple(c))

    trace = math.fsum((b1, b2))
    tau = tolerances.sum_tolerance(trace)
    sum_gap = weights.total - trace
    count_ok = len(weights) >= 2
    if abs(sum_gap) > tau:
        report = FeasibilityReport(
            feasible=False, violating_p=None, sum_gap=float(sum_gap), count_ok=count_ok, tolerance=tau,
        )
        raise Infeasible(f"No planar decomposition exists: {report.describe()}", report)

    # c_1 <= (rest of the perimeter) + slack  <=>  c_1 <= b1 + tau
    try:
        solution = polygon_angles(weights.sorted_weights, b1 - b2, tolerances, slack=2.0 * tau - sum_gap)
    except NoPolygon as e:
        report = FeasibilityReport(
            feasible=False,
            violating_p=1,
            sum_gap=float(sum_gap),
            count_ok=count_ok,
            tolerance=tau,
            partial_weight_sum=float(weights.sorted_weights[0]),
            partial_eigen_sum=b1,
        )
        raise Infeasible(f"No planar decomposition exists: {report.describe()}", report) from e

    logger.debug(f"Planar decomposition closed with residual {solution.closure_residual:.3e}")
    terms = tuple(zip(weights.sorted_weights, solution.unit_vectors()))
    return RankOneDecomposition(
        terms=terms,
        dim=2,
        source_indices=weights.permutation,
        unit_tolerance=tolerances.unit_norm,
    )
