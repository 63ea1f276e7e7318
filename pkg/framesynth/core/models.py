"""Data models for operators, spectra, decompositions and configuration."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, ClassVar, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .errors import DimensionMismatch, EmptyInput, InputError, InvalidWeights


# Reference value that ``Tolerances.with_base`` rescales from.
REFERENCE_TOLERANCE = 1e-9


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class StepKind(Enum):
    """Kinds of subtraction steps taken while decomposing an operator."""
    CASE1 = "case1"        # eigenvalue pair merged through a two-dimensional rotation
    CASE2 = "case2"        # weight subtracted along the smallest eigenvector, rank kept
    RANK_ONE = "rank_one"  # operator already rank one, weight taken along its range


class Tolerances(BaseModel):
    """Numerical tolerances used across the package.

    Relative values are turned into absolute thresholds by the helper methods,
    scaled by the size of the operator being processed.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    SCALED_FIELDS: ClassVar[Tuple[str, ...]] = (
        "orthogonality", "unit_norm", "reconstruction", "rank", "sums", "psd", "closure",
    )

    orthogonality: float = Field(default=1e-10, description="Max deviation of eigenvector Gram matrix from identity")
    unit_norm: float = Field(default=1e-10, description="Max deviation of a unit vector's norm from 1")
    reconstruction: float = Field(default=1e-10, description="Reconstruction tolerance relative to max(||B||_F, 1)")
    rank: float = Field(default=1e-9, description="Eigenvalues below this times max(|lambda|, 1) count as zero")
    sums: float = Field(default=1e-9, description="Partial-sum tolerance relative to max(sum of eigenvalues, 1)")
    psd: float = Field(default=1e-9, description="Negative eigenvalue tolerance relative to max(||B||, 1)")
    closure: float = Field(default=1e-9, description="Polygon closure tolerance relative to max(perimeter, 1)")

    jacobi_offdiag: float = Field(default=1e-12, description="Jacobi stop criterion, off-diagonal norm relative to ||B||_F")
    jacobi_max_sweeps: int = Field(default=30, description="Maximum number of cyclic Jacobi sweeps")
    bisection: float = Field(default=1e-15, description="Relative bisection tolerance on the circumradius")
    bisection_max_iter: int = Field(default=200, description="Maximum bisection iterations")
    stream_cap: int = Field(default=1_000_000, description="Stream values consumed before block planning stalls")

    @field_validator(
        "orthogonality", "unit_norm", "reconstruction", "rank", "sums", "psd", "closure",
        "jacobi_offdiag", "bisection",
    )
    @classmethod
    def validate_positive_float(cls, v: float) -> float:
        if not (v > 0 and math.isfinite(v)):
            raise ValueError("Tolerances must be positive and finite")
        return v

    @field_validator("jacobi_max_sweeps", "bisection_max_iter", "stream_cap")
    @classmethod
    def validate_positive_int(cls, v: int) -> int:
        if v < 1:
            raise ValueError("Iteration caps must be at least 1")
        return v

    def with_base(self, tol: float) -> "Tolerances":
        """Rescale every tolerance so the partial-sum/rank reference becomes ``tol``."""
        if not (tol > 0 and math.isfinite(tol)):
            raise InputError(f"Tolerance must be positive, got {tol}")
        factor = tol / REFERENCE_TOLERANCE
        return self.model_copy(update={name: getattr(self, name) * factor for name in self.SCALED_FIELDS})

    def sum_tolerance(self, total: float) -> float:
        return self.sums * max(abs(total), 1.0)

    def psd_tolerance(self, scale: float) -> float:
        return self.psd * max(abs(scale), 1.0)

    def rank_tolerance(self, max_eigenvalue: float) -> float:
        return self.rank * max(abs(max_eigenvalue), 1.0)

    def reconstruction_tolerance(self, norm: float) -> float:
        return self.reconstruction * max(abs(norm), 1.0)

    def closure_tolerance(self, perimeter: float) -> float:
        return self.closure * max(abs(perimeter), 1.0)


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True, eq=False)
class SymmetricMatrix:
    """Dense real symmetric matrix, symmetrized on construction."""
    entries: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"Expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise EmptyInput("Matrix must have dimension at least 1")
        if not np.all(np.isfinite(a)):
            raise InputError("Matrix entries must be finite")
        object.__setattr__(self, "entries", _readonly((a + a.T) / 2.0))

    @classmethod
    def diagonal(cls, values: Sequence[float]) -> "SymmetricMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def identity(cls, dim: int, scale: float = 1.0) -> "SymmetricMatrix":
        return cls(scale * np.eye(dim))

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @property
    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))

    def tolist(self) -> List[List[float]]:
        return self.entries.tolist()


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues in nonincreasing order with orthonormal eigenvectors as columns."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank_tolerance: float = 0.0

    def __post_init__(self) -> None:
        values = np.array(self.eigenvalues, dtype=float)
        vectors = np.array(self.eigenvectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[1] != values.shape[0]:
            raise DimensionMismatch(
                f"Got {values.shape[0]} eigenvalues but eigenvector array of shape {vectors.shape}"
            )
        if np.any(np.diff(values) > 0):
            raise InputError("Eigenvalues must be nonincreasing")
        object.__setattr__(self, "eigenvalues", _readonly(values))
        object.__setattr__(self, "eigenvectors", _readonly(vectors))

    @property
    def dim(self) -> int:
        return int(self.eigenvectors.shape[0])

    @property
    def numerically_zero(self) -> np.ndarray:
        """Mask of eigenvalues that count as zero for rank purposes."""
        return np.abs(self.eigenvalues) <= self.rank_tolerance

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(~self.numerically_zero))

    @property
    def max_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[-1])

    def positive_part(self) -> Tuple[np.ndarray, np.ndarray]:
        """Eigenvalues above the rank tolerance and their eigenvectors."""
        keep = self.eigenvalues > self.rank_tolerance
        return self.eigenvalues[keep], self.eigenvectors[:, keep]

    def reconstruct(self) -> SymmetricMatrix:
        v = self.eigenvectors
        return SymmetricMatrix((v * self.eigenvalues) @ v.T)


@dataclass(frozen=True)
class DecompositionStep:
    """One subtraction performed while decomposing an operator."""
    kind: StepKind
    weight: float
    position: int
    mixing: Optional[float]
    trace_after: float
    rank_after: int
    min_eigenvalue_after: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "weight": self.weight,
            "position": self.position,
            "mixing": self.mixing,
            "trace_after": self.trace_after,
            "rank_after": self.rank_after,
            "min_eigenvalue_after": self.min_eigenvalue_after,
        }


@dataclass(frozen=True, eq=False)
class RankOneDecomposition:
    """Ordered (weight, unit vector) pairs whose weighted projections sum to an operator."""
    terms: Tuple[Tuple[float, np.ndarray], ...]
    dim: int
    source_indices: Optional[Tuple[int, ...]] = None
    steps: Tuple[DecompositionStep, ...] = ()
    unit_tolerance: float = 1e-10

    def __post_init__(self) -> None:
        checked = []
        for weight, vector in self.terms:
            v = np.array(vector, dtype=float)
            if v.shape != (self.dim,):
                raise DimensionMismatch(f"Vector of shape {v.shape} in a decomposition of dimension {self.dim}")
            if not weight > 0:
                raise InvalidWeights(f"Decomposition weights must be positive, got {weight}")
            if abs(np.linalg.norm(v) - 1.0) > self.unit_tolerance:
                raise InputError(f"Decomposition vector has norm {np.linalg.norm(v)}, expected 1")
            checked.append((float(weight), _readonly(v)))
        object.__setattr__(self, "terms", tuple(checked))

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.terms], dtype=float)

    @property
    def vectors(self) -> np.ndarray:
        """Vectors as rows of a (k, dim) array."""
        if not self.terms:
            return np.zeros((0, self.dim))
        return np.vstack([v for _, v in self.terms])


@dataclass(frozen=True, eq=False)
class WeightSequence:
    """Prescribed positive weights with their nonincreasing view."""
    weights: Tuple[float, ...]
    sorted_weights: Tuple[float, ...] = field(init=False)
    permutation: Tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        values = tuple(float(w) for w in self.weights)
        if not values:
            raise EmptyInput("Weight sequence is empty")
        for i, w in enumerate(values):
            if not (w > 0 and math.isfinite(w)):
                raise InvalidWeights(f"Weight {i} must be positive and finite, got {w}")
        # Stable sort: equal weights keep their input order.
        order = tuple(sorted(range(len(values)), key=lambda i: -values[i]))
        object.__setattr__(self, "weights", values)
        object.__setattr__(self, "sorted_weights", tuple(values[i] for i in order))
        object.__setattr__(self, "permutation", order)

    @classmethod
    def from_norms(cls, norms: Sequence[float]) -> "WeightSequence":
        """Weights c_i = a_i^2 for prescribed vector norms a_i."""
        for i, a in enumerate(norms):
            if not (a > 0 and math.isfinite(a)):
                raise InvalidWeights(f"Norm {i} must be positive and finite, got {a}")
        return cls(tuple(float(a) ** 2 for a in norms))

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def total(self) -> float:
        return math.fsum(self.weights)


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of the partial-sum test of weights against a spectrum."""
    feasible: bool
    violating_p: Optional[int]
    sum_gap: float
    count_ok: bool
    tolerance: float
    partial_weight_sum: Optional[float] = None
    partial_eigen_sum: Optional[float] = None

    def describe(self) -> str:
        if self.feasible:
            return "feasible"
        reasons = []
        if not self.count_ok:
            reasons.append("fewer weights than the rank")
        if abs(self.sum_gap) > self.tolerance:
            reasons.append(f"weight total differs from the trace by {self.sum_gap:.6g}")
        if self.violating_p is not None:
            reasons.append(
                f"partial sum at p={self.violating_p}: "
                f"{self.partial_weight_sum:.6g} > {self.partial_eigen_sum:.6g}, "
                f"the largest trace of a rank-{self.violating_p} compression"
            )
        return "infeasible: " + "; ".join(reasons)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "feasible": self.feasible,
            "violating_p": self.violating_p,
            "sum_gap": self.sum_gap,
            "count_ok": self.count_ok,
            "tolerance": self.tolerance,
            "partial_weight_sum": self.partial_weight_sum,
            "partial_eigen_sum": self.partial_eigen_sum,
        }


@dataclass(frozen=True, eq=False)
class FrameSet:
    """Frame vectors (rows) with their norms, frame operator and frame bounds."""
    vectors: np.ndarray
    norms: np.ndarray
    frame_operator: SymmetricMatrix
    bounds: Tuple[float, float]
    source_indices: Optional[Tuple[int, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "vectors", _readonly(np.array(self.vectors, dtype=float)))
        object.__setattr__(self, "norms", _readonly(np.array(self.norms, dtype=float)))

    def __len__(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return self.frame_operator.dim

    def is_tight(self, tolerances: Tolerances = DEFAULT_TOLERANCES) -> bool:
        lower, upper = self.bounds
        return upper - lower <= tolerances.reconstruction_tolerance(upper)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "vectors": self.vectors.tolist(),
            "norms": self.norms.tolist(),
            "frame_operator": self.frame_operator.tolist(),
            "bounds": list(self.bounds),
            "source_indices": list(self.source_indices) if self.source_indices is not None else None,
        }
