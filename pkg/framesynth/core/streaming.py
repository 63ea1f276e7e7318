"""Block-by-block rank-one decomposition of the identity on l^2.

Given weights 0 < c_i <= 1 with sum c_i = inf and sum (1 - c_i) = inf, the
identity on the basis e_1, e_2, ... splits into finite diagonal blocks

    B_i = (1 - r(n_{i-1})) E_{n_{i-1}+1} + E_{n_{i-1}+2} + ... + E_{n_i} + r(n_i) E_{n_i+1}

each decomposed by the finite algorithm with the weights c_{s(n_{i-1})+1..s(n_i)}.
Bookkeeping uses exact rational prefix sums:

    P(j) = c_1 + ... + c_j      s(n) = min{s : P(s) > n}
    r(n) = P(s(n)) - n          g(n) = s(n) - n          d(j) = j - P(j)

with the convention n_0 = s(0) = g(0) = 0 and r(0) = 0.
"""

import itertools
import json
import logging
import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .decomposer import SpectralState, decompose, decompose_operator
from .errors import BlockInfeasible, InputError, InvalidWeights, ProblemFileError, Stalled
from .feasibility import check_finite
from .models import DEFAULT_TOLERANCES, RankOneDecomposition, SymmetricMatrix, Tolerances, WeightSequence


logger = logging.getLogger(__name__)

sentinel = object()


def constant_weights(value: float) -> Iterator[float]:
    """c_i = value for every i."""
    return itertools.repeat(float(value))


def ratio_weights() -> Iterator[float]:
    """c_i = i / (i + 1)."""
    return (i / (i + 1) for i in itertools.count(1))


def _parse_prefix_file(path: Path) -> List[float]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ProblemFileError(f"Cannot read weight file {path}: {e}") from e

    try:
        if text.lstrip().startswith("["):
            return [float(v) for v in json.loads(text)]
        lines = (line.strip() for line in text.splitlines())
        return [float(Fraction(line)) for line in lines if line and not line.startswith("#")]
    except (ValueError, TypeError, ZeroDivisionError) as e:
        raise ProblemFileError(f"Malformed weight file {path}: {e}") from e


class WeightStream:
    """Lazily consumed weight sequence with cached values and exact prefix sums.

    Positions are 1-based. Asking for more than ``cap`` values, or running
    off the end of a finite source, raises ``Stalled``.
    """

    def __init__(self, source: Iterable[float], cap: int = DEFAULT_TOLERANCES.stream_cap, name: str = "stream"):
        self._source = iter(source)
        self._values: List[float] = []
        self._prefix: List[Fraction] = [Fraction(0)]
        self.cap = cap
        self.name = name

    @classmethod
    def from_source(cls, source: str, cap: int = DEFAULT_TOLERANCES.stream_cap) -> "WeightStream":
        """Build a stream from ``const:<v>``, ``ratio`` or the path of a file of prefix values."""
        if source.startswith("const:"):
            try:
                value = float(Fraction(source[len("const:"):]))
            except (ValueError, ZeroDivisionError) as e:
                raise InputError(f"Bad constant weight in {source!r}") from e
            return cls(constant_weights(value), cap=cap, name=source)
        if source == "ratio":
            return cls(ratio_weights(), cap=cap, name=source)

        path = Path(source)
        if not path.is_file():
            raise InputError(f"Unknown weight stream {source!r}: expected const:<v>, ratio or a file")
        return cls(_parse_prefix_file(path), cap=cap, name=path.name)

    @property
    def consumed(self) -> int:
        return len(self._values)

    def _extend_to(self, j: int) -> None:
        while len(self._values) < j:
            if len(self._values) >= self.cap:
                logger.warning(f"Weight stream {self.name} hit the cap of {self.cap} values")
                raise Stalled(f"No block schedule within the first {self.cap} weights of {self.name}", self.cap)
            value = next(self._source, sentinel)
            if value is sentinel:
                raise Stalled(
                    f"Weight stream {self.name} ended after {len(self._values)} values", len(self._values)
                )
            value = float(value)
            if not 0 < value <= 1:
                raise InvalidWeights(f"Stream weight {len(self._values) + 1} must lie in (0, 1], got {value}")
            self._values.append(value)
            self._prefix.append(self._prefix[-1] + Fraction(value))

    def value(self, j: int) -> float:
        self._extend_to(j)
        return self._values[j - 1]

    def values(self, start: int, stop: int) -> Tuple[float, ...]:
        """c_start .. c_stop inclusive."""
        self._extend_to(stop)
        return tuple(self._values[start - 1:stop])

    def prefix_sum(self, j: int) -> Fraction:
        self._extend_to(j)
        return self._prefix[j]

    def deficit(self, j: int) -> Fraction:
        """d(j) = (1 - c_1) + ... + (1 - c_j)."""
        return j - self.prefix_sum(j)

    def threshold(self, n: int) -> int:
        """s(n), the first position whose prefix sum exceeds n; s(0) = 0."""
        if n == 0:
            return 0
        while self._prefix[-1] <= n:
            self._extend_to(len(self._values) + 1)
        return bisect_right(self._prefix, n)

    def residual(self, n: int) -> Fraction:
        """r(n) = P(s(n)) - n, in (0, 1] for n >= 1."""
        if n == 0:
            return Fraction(0)
        return self.prefix_sum(self.threshold(n)) - n

    def gap(self, n: int) -> int:
        """g(n) = s(n) - n."""
        return self.threshold(n) - n


@dataclass(frozen=True)
class BlockPlan:
    """Schedule entry for block ``index``: covers n_prev < n <= n_i."""
    index: int
    n: int
    threshold: int
    residual: Fraction
    n_prev: int
    threshold_prev: int
    residual_prev: Fraction

    @property
    def gap(self) -> int:
        return self.threshold - self.n

    @property
    def size(self) -> int:
        return self.n - self.n_prev

    @property
    def weight_range(self) -> Tuple[int, int]:
        """First and last stream position assigned to this block."""
        return self.threshold_prev + 1, self.threshold

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "n": self.n,
            "threshold": self.threshold,
            "residual": float(self.residual),
            "gap": self.gap,
            "weight_range": list(self.weight_range),
        }


def block_plan(w: WeightStream) -> Iterator[BlockPlan]:
    """Greedy block schedule: each n_i is the smallest n > n_{i-1} with

    g(n) >= g(n_{i-1}) + 1  and  d(s(n_{i-1}) + n - n_{i-1} + 1) - d(s(n_{i-1})) > 2.
    """
    n_prev, s_prev, r_prev, g_prev = 0, 0, Fraction(0), 0
    for index in itertools.count(1):
        base = w.deficit(s_prev)
        n = n_prev + 1
        while not (w.gap(n) >= g_prev + 1 and w.deficit(s_prev + n - n_prev + 1) - base > 2):
            n += 1

        plan = BlockPlan(
            index=index,
            n=n,
            threshold=w.threshold(n),
            residual=w.residual(n),
            n_prev=n_prev,
            threshold_prev=s_prev,
            residual_prev=r_prev,
        )
        logger.debug(f"Block {index}: n={plan.n} s={plan.threshold} r={float(plan.residual):.6g}")
        yield plan
        n_prev, s_prev, r_prev, g_prev = plan.n, plan.threshold, plan.residual, plan.gap


@dataclass(frozen=True)
class FiniteBlock:
    """Diagonal block on coordinates n_prev .. n (0-based) with its assigned weights."""
    plan: BlockPlan
    eigenvalues: Tuple[float, ...]
    weights: Tuple[float, ...]
    exact_trace: Fraction

    @property
    def offset(self) -> int:
        return self.plan.n_prev

    @property
    def coordinates(self) -> range:
        return range(self.plan.n_prev, self.plan.n + 1)


def finite_block(w: WeightStream, plan: BlockPlan) -> FiniteBlock:
    first, last = plan.weight_range
    diagonal = [1 - plan.residual_prev] + [Fraction(1)] * (plan.size - 1) + [plan.residual]
    exact_trace = sum(diagonal, Fraction(0))
    assigned = w.prefix_sum(last) - w.prefix_sum(first - 1)
    if exact_trace != assigned:
        raise BlockInfeasible(f"Block {plan.index} trace {exact_trace} differs from its weights {assigned}")
    return FiniteBlock(
        plan=plan,
        eigenvalues=tuple(float(x) for x in diagonal),
        weights=w.values(first, last),
        exact_trace=exact_trace,
    )


@dataclass(frozen=True)
class SparseVector:
    """Finitely supported vector over the basis e_0, e_1, ... (0-based coordinates)."""
    indices: Tuple[int, ...]
    values: Tuple[float, ...]

    @classmethod
    def from_dense(cls, dense: np.ndarray, offset: int = 0) -> "SparseVector":
        support = np.flatnonzero(dense)
        return cls(
            indices=tuple(int(i) + offset for i in support),
            values=tuple(float(dense[i]) for i in support),
        )

    @property
    def norm(self) -> float:
        return math.sqrt(math.fsum(v * v for v in self.values))

    def scaled(self, factor: float) -> "SparseVector":
        return SparseVector(self.indices, tuple(factor * v for v in self.values))

    def to_dense(self, size: int) -> np.ndarray:
        """First ``size`` coordinates; entries beyond are dropped."""
        dense = np.zeros(size)
        for i, v in zip(self.indices, self.values):
            if i < size:
                dense[i] = v
        return dense

    def to_dict(self) -> dict:
        return {"indices": list(self.indices), "values": list(self.values)}


@dataclass(frozen=True)
class StreamTerm:
    """Weight c_index with its unit vector, produced while decomposing block ``block``."""
    index: int
    weight: float
    vector: SparseVector
    block: int

    def to_dict(self) -> dict:
        return {"index": self.index, "weight": self.weight, "block": self.block, **self.vector.to_dict()}


@dataclass(frozen=True)
class IdentityBlock:
    plan: BlockPlan
    block: FiniteBlock
    terms: Tuple[StreamTerm, ...]

    def operator(self) -> np.ndarray:
        """sum of the block's terms on its own coordinates n_prev .. n."""
        size = self.plan.size + 1
        vectors = np.array([term.vector.to_dense(self.block.offset + size)[self.block.offset:] for term in self.terms])
        weights = np.array([term.weight for term in self.terms])
        return (vectors.T * weights) @ vectors


def decompose_block(
    w: WeightStream,
    plan: BlockPlan,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> IdentityBlock:
    block = finite_block(w, plan)
    head = math.fsum(block.weights[:plan.size])
    if head >= plan.size - 1:
        raise BlockInfeasible(
            f"Block {plan.index}: first {plan.size} weights sum to {head:.12g}, need less than {plan.size - 1}"
        )

    state = SpectralState.from_diagonal(block.eigenvalues)
    weights = WeightSequence(block.weights)
    report = check_finite(state.eigenvalues, weights, tolerances)
    if not report.feasible:
        logger.error(f"Block {plan.index} is not decomposable: {report.describe()}")
        raise BlockInfeasible(f"Block {plan.index}: {report.describe()}")

    decomposition = decompose(state, weights, tolerances)
    first, _ = plan.weight_range
    terms = sorted(
        (
            StreamTerm(
                index=first + source,
                weight=weight,
                vector=SparseVector.from_dense(vector, offset=block.offset),
                block=plan.index,
            )
            for (weight, vector), source in zip(decomposition.terms, decomposition.source_indices)
        ),
        key=lambda term: term.index,
    )
    logger.info(f"Block {plan.index}: {len(terms)} terms on coordinates {plan.n_prev}..{plan.n}")
    return IdentityBlock(plan=plan, block=block, terms=tuple(terms))


def identity_blocks(w: WeightStream, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Iterator[IdentityBlock]:
    for plan in block_plan(w):
        yield decompose_block(w, plan, tolerances)


def identity_stream(w: WeightStream, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Iterator[StreamTerm]:
    """Terms c_i x_i x_i^T in stream order whose partial sums converge strongly to I."""
    for result in identity_blocks(w, tolerances):
        yield from result.terms


def identity_frame_stream(
    norms: Iterable[float],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    cap: Optional[int] = None,
) -> Iterator[Tuple[int, SparseVector]]:
    """Parseval frame vectors a_i x_i for norms 0 < a_i <= 1."""
    stream = WeightStream(
        (a * a for a in norms),
        cap=tolerances.stream_cap if cap is None else cap,
        name="norms",
    )
    for term in identity_stream(stream, tolerances):
        yield term.index, term.vector.scaled(math.sqrt(term.weight))


def partial_sum(terms: Iterable[StreamTerm], size: int) -> np.ndarray:
    """sum w_i x_i x_i^T restricted to the first ``size`` coordinates."""
    total = np.zeros((size, size))
    for term in terms:
        x = term.vector.to_dense(size)
        total += term.weight * np.outer(x, x)
    return total


def scaled_decomposition(
    b: SymmetricMatrix,
    c: Sequence[float],
    alpha: float,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> RankOneDecomposition:
    """Decompose alpha*B with weights alpha*c_i and read it back as a decomposition of B."""
    if not (alpha > 0 and math.isfinite(alpha)):
        raise InvalidWeights(f"Scale factor must be positive, got {alpha}")
    weights = WeightSequence(tuple(c))
    scaled = decompose_operator(
        SymmetricMatrix(alpha * b.entries),
        [alpha * x for x in weights.weights],
        tolerances,
    )
    return RankOneDecomposition(
        terms=tuple((weights.weights[i], v) for (_, v), i in zip(scaled.terms, scaled.source_indices)),
        dim=b.dim,
        source_indices=scaled.source_indices,
        unit_tolerance=tolerances.unit_norm,
    )
