"""Constructive rank-one decomposition of positive operators and frame synthesis.

The decomposition repeatedly subtracts one weighted projection from the
remaining operator. Two kinds of step occur:

* when the head weight lies between two neighbouring eigenvalues, a unit
  vector in their two-dimensional eigenspace is chosen so that the pair
  collapses into a single eigenvalue ``b_j + b_{j+1} - c`` (rank drops by one);
* when the head weight is below the smallest eigenvalue, it is taken along the
  smallest eigenvector, shrinking that eigenvalue without changing the rank.

The remaining operator is tracked through its eigenpairs only; each step
touches at most two eigenvectors.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .errors import (
    FFIViolated, Infeasible, InvalidWeights, NotPositive, NumericalBreakdown, PreconditionViolated,
)
from .feasibility import check_ffi, check_finite
from .models import (
    DEFAULT_TOLERANCES, DecompositionStep, FrameSet, RankOneDecomposition, Spectrum, StepKind,
    SymmetricMatrix, Tolerances, WeightSequence,
)
from .spectral import assemble_terms, eigh, frame_bounds


logger = logging.getLogger(__name__)

Weights = Union[WeightSequence, Sequence[float]]


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Positive eigenpairs of the operator still to be decomposed, nonincreasing."""
    eigenvalues: Tuple[float, ...]
    eigenvectors: Tuple[np.ndarray, ...]
    dim: int

    def __post_init__(self) -> None:
        if len(self.eigenvalues) != len(self.eigenvectors):
            raise PreconditionViolated("Each eigenvalue needs exactly one eigenvector")
        for value in self.eigenvalues:
            if not value > 0:
                raise PreconditionViolated(f"Spectral state eigenvalues must be positive, got {value}")
        for hi, lo in zip(self.eigenvalues, self.eigenvalues[1:]):
            if lo > hi:
                raise PreconditionViolated("Spectral state eigenvalues must be nonincreasing")
        for vector in self.eigenvectors:
            if vector.shape != (self.dim,):
                raise PreconditionViolated(f"Eigenvector of shape {vector.shape} in dimension {self.dim}")

    @classmethod
    def from_diagonal(cls, values: Sequence[float]) -> "SpectralState":
        """State of diag(values); zero entries are dropped, ties keep their coordinate order."""
        dim = len(values)
        order = sorted((i for i in range(dim) if values[i] != 0), key=lambda i: -values[i])
        basis = np.eye(dim)
        return cls(
            eigenvalues=tuple(float(values[i]) for i in order),
            eigenvectors=tuple(basis[i].copy() for i in order),
            dim=dim,
        )

    @classmethod
    def from_spectrum(cls, spectrum: Spectrum, tolerances: Tolerances = DEFAULT_TOLERANCES) -> "SpectralState":
        psd_tol = tolerances.psd_tolerance(float(np.max(np.abs(spectrum.eigenvalues))))
        if spectrum.min_eigenvalue < -psd_tol:
            logger.error(f"Operator is not positive: smallest eigenvalue {spectrum.min_eigenvalue:.6g}")
            raise NotPositive(
                f"Operator has eigenvalue {spectrum.min_eigenvalue:.6g} below -{psd_tol:.3g}",
                spectrum.min_eigenvalue,
            )
        values, vectors = spectrum.positive_part()
        return cls(
            eigenvalues=tuple(float(v) for v in values),
            eigenvectors=tuple(vectors[:, i].copy() for i in range(vectors.shape[1])),
            dim=spectrum.dim,
        )

    @property
    def rank(self) -> int:
        return len(self.eigenvalues)

    @property
    def trace(self) -> float:
        return math.fsum(self.eigenvalues)

    @property
    def min_eigenvalue(self) -> float:
        return self.eigenvalues[-1] if self.eigenvalues else 0.0

    def to_matrix(self) -> SymmetricMatrix:
        vectors = np.array(self.eigenvectors).reshape(self.rank, self.dim)
        return assemble_terms(self.eigenvalues, vectors, self.dim)

    def _replace_last(self, value: float) -> "SpectralState":
        if value <= 0:
            return SpectralState(self.eigenvalues[:-1], self.eigenvectors[:-1], self.dim)
        return SpectralState(self.eigenvalues[:-1] + (value,), self.eigenvectors, self.dim)


def mixing_parameter(b_hi: float, b_lo: float, c: float) -> float:
    """Solve det(diag(b_hi, b_lo) - c x x^T) = 0 for x = (sqrt(1-t), sqrt(t)).

    The determinant is b_hi*b_lo - c*(t*b_hi + (1-t)*b_lo), giving
    t = b_lo*(b_hi - c) / (c*(b_hi - b_lo)); t = 0 for a repeated eigenvalue.
    """
    gap = b_hi - b_lo
    if gap <= 0:
        return 0.0
    c = min(max(c, b_lo), b_hi)
    t = b_lo * (b_hi - c) / (c * gap)
    return min(max(t, 0.0), 1.0)


def lemma_step(
    s: SpectralState,
    j: int,
    c: float,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> Tuple[np.ndarray, SpectralState]:
    """Subtract c x x^T with x in span{e_j, e_{j+1}} so the rank drops by one.

    Requires b_j >= c >= b_{j+1} (within the partial-sum tolerance). The
    merged eigenvalue b_j + b_{j+1} - c keeps position ``j``.
    """
    if not 0 <= j < s.rank - 1:
        raise PreconditionViolated(f"Position {j} is not a valid eigenvalue pair for rank {s.rank}")
    b_hi, b_lo = s.eigenvalues[j], s.eigenvalues[j + 1]
    tau = tolerances.sum_tolerance(s.trace)
    if c > b_hi + tau or c < b_lo - tau:
        raise PreconditionViolated(f"Weight {c:.12g} is outside [{b_lo:.12g}, {b_hi:.12g}]")

    t = mixing_parameter(b_hi, b_lo, c)
    e_hi, e_lo = s.eigenvectors[j], s.eigenvectors[j + 1]

    x = math.sqrt(1.0 - t) * e_hi + math.sqrt(t) * e_lo
    x = x / np.linalg.norm(x)

    # Range of the rank-one 2x2 remainder: orthogonal to its kernel direction D^{-1} x.
    z_hi, z_lo = math.sqrt(t) * b_hi, -math.sqrt(1.0 - t) * b_lo
    z = (z_hi * e_hi + z_lo * e_lo) / math.hypot(z_hi, z_lo)
    z = z / np.linalg.norm(z)

    merged = min(max(b_hi + b_lo - c, b_lo), b_hi)
    state = SpectralState(
        eigenvalues=s.eigenvalues[:j] + (merged,) + s.eigenvalues[j + 2:],
        eigenvectors=s.eigenvectors[:j] + (z,) + s.eigenvectors[j + 2:],
        dim=s.dim,
    )
    return x, state


def _case1_position(eigenvalues: Sequence[float], c: float, tau: float) -> int:
    """Smallest l with b_l >= c >= b_{l+1}."""
    for l in range(len(eigenvalues) - 1):
        if eigenvalues[l + 1] <= c + tau:
            return l
    return len(eigenvalues) - 2


def decompose(
    s: SpectralState,
    c: Weights,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> RankOneDecomposition:
    """Rank-one decomposition of the operator held in ``s`` with prescribed weights.

    Weights are processed in nonincreasing order; the result carries the
    sorted weights, the permutation back to caller order and a step trace.
    """
    weights = c if isinstance(c, WeightSequence) else WeightSequence(tuple(c))
    if s.rank == 0:
        raise Infeasible("Operator is zero; nothing to decompose")

    report = check_finite(s.eigenvalues, weights, tolerances)
    if not report.feasible:
        logger.warning(f"Rejected weights: {report.describe()}")
        raise Infeasible(f"No rank-one decomposition exists: {report.describe()}", report)

    tau = report.tolerance
    psd_tol = tolerances.psd_tolerance(s.eigenvalues[0])
    state = s
    terms: List[Tuple[float, np.ndarray]] = []
    steps: List[DecompositionStep] = []

    for i, weight in enumerate(weights.sorted_weights):
        mixing = None
        if state.rank == 0:
            # Only rounding-level weights can be left once the operator is used up.
            pending = math.fsum(weights.sorted_weights[i:])
            if pending > tau or not terms:
                raise NumericalBreakdown(f"Operator exhausted with weight {pending:.6g} left")
            kind, position, x = StepKind.RANK_ONE, 0, terms[-1][1]
        elif state.rank == 1 or weight < state.eigenvalues[-1] - tau:
            b_min = state.eigenvalues[-1]
            kind = StepKind.RANK_ONE if state.rank == 1 else StepKind.CASE2
            position = state.rank - 1
            x = state.eigenvectors[-1]
            remaining = b_min - weight
            if remaining < -psd_tol:
                raise NumericalBreakdown(f"Intermediate eigenvalue {remaining:.6g} is negative")
            if i == len(weights) - 1 and remaining <= tau:
                remaining = 0.0
            state = state._replace_last(remaining)
        else:
            kind = StepKind.CASE1
            position = _case1_position(state.eigenvalues, weight, tau)
            mixing = mixing_parameter(state.eigenvalues[position], state.eigenvalues[position + 1], weight)
            try:
                x, state = lemma_step(state, position, weight, tolerances)
            except PreconditionViolated as e:
                raise NumericalBreakdown(f"Intermediate state lost feasibility: {e}") from e

        terms.append((weight, x))
        steps.append(DecompositionStep(
            kind=kind,
            weight=weight,
            position=position,
            mixing=mixing,
            trace_after=state.trace,
            rank_after=state.rank,
            min_eigenvalue_after=state.min_eigenvalue,
        ))
        logger.debug(f"{kind.value} step: weight={weight:.6g} position={position} rank={state.rank}")

    if state.rank and state.trace > tau:
        raise NumericalBreakdown(f"Weights exhausted with trace {state.trace:.6g} left over")

    logger.info(f"Decomposed rank-{s.rank} operator into {len(terms)} rank-one terms")
    return RankOneDecomposition(
        terms=tuple(terms),
        dim=s.dim,
        source_indices=weights.permutation,
        steps=tuple(steps),
        unit_tolerance=tolerances.unit_norm,
    )


def decompose_operator(
    b: SymmetricMatrix,
    c: Weights,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> RankOneDecomposition:
    """Eigendecompose a positive semidefinite matrix and decompose it."""
    state = SpectralState.from_spectrum(eigh(b, tolerances), tolerances)
    return decompose(state, c, tolerances)


def _frame_from_decomposition(
    decomposition: RankOneDecomposition,
    tolerances: Tolerances,
) -> FrameSet:
    norms = np.sqrt(decomposition.weights)
    vectors = decomposition.vectors * norms[:, None]
    frame_operator = assemble_terms(np.ones(len(norms)), vectors, decomposition.dim)
    return FrameSet(
        vectors=vectors,
        norms=norms,
        frame_operator=frame_operator,
        bounds=frame_bounds(vectors, tolerances),
        source_indices=decomposition.source_indices,
    )


def synthesize_frame(
    b: SymmetricMatrix,
    norms: Sequence[float],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> FrameSet:
    """Frame with frame operator ``b`` whose vectors have the prescribed norms.

    Vectors come out in nonincreasing norm order; ``source_indices`` maps
    them back to the caller's order.
    """
    weights = WeightSequence.from_norms(norms)
    state = SpectralState.from_spectrum(eigh(b, tolerances), tolerances)
    if state.rank < b.dim:
        logger.warning(f"Operator has rank {state.rank} < {b.dim}; vectors span only its range")
    frame = _frame_from_decomposition(decompose(state, weights, tolerances), tolerances)
    logger.info(f"Synthesized {len(frame)} frame vectors with bounds {frame.bounds}")
    return frame


def tight_frame(
    n: int,
    norms: Sequence[float],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> FrameSet:
    """Tight frame for R^n with prescribed norms and frame bound (1/n) sum a_i^2."""
    satisfied, frame_bound = check_ffi(norms, n, tolerances)
    if not satisfied:
        raise FFIViolated(
            f"Largest squared norm {max(norms) ** 2:.6g} exceeds the frame bound {frame_bound:.6g}",
            frame_bound,
        )
    state = SpectralState.from_diagonal([frame_bound] * n)
    frame = _frame_from_decomposition(decompose(state, WeightSequence.from_norms(norms), tolerances), tolerances)
    logger.info(f"Tight frame of {len(frame)} vectors for R^{n} with bound {frame_bound:.6g}")
    return frame


def parseval_frame(
    n: int,
    norms: Sequence[float],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> FrameSet:
    """Tight frame with bound 1; the squared norms must add up to n."""
    total = WeightSequence.from_norms(norms).total
    if abs(total - n) > tolerances.sum_tolerance(n):
        raise InvalidWeights(f"Squared norms sum to {total:.12g}, a Parseval frame for R^{n} needs {n}")
    return tight_frame(n, norms, tolerances)
