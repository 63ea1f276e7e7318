"""Independent verification of decompositions and frames."""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from .errors import DimensionMismatch, EmptyInput
from .feasibility import check_finite
from .models import DEFAULT_TOLERANCES, FeasibilityReport, FrameSet, SymmetricMatrix, Tolerances
from .spectral import ArrayLike, assemble_terms, eigh, frame_bounds


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VerificationReport:
    """Quantities recomputed from an emitted decomposition."""
    reconstruction_error: float
    min_intermediate_eigenvalue: float
    frame_bounds: Tuple[float, float]
    tight: bool
    frame_bound: Optional[float]
    max_norm_deviation: float
    feasibility: FeasibilityReport
    operator_norm: float

    def passed(self, tolerances: Tolerances = DEFAULT_TOLERANCES) -> bool:
        return (
            self.reconstruction_error <= tolerances.reconstruction
            and self.max_norm_deviation <= tolerances.unit_norm
            and self.min_intermediate_eigenvalue >= -tolerances.psd_tolerance(self.operator_norm)
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "reconstruction_error": self.reconstruction_error,
            "min_intermediate_eigenvalue": self.min_intermediate_eigenvalue,
            "frame_bounds": list(self.frame_bounds),
            "tight": self.tight,
            "frame_bound": self.frame_bound,
            "max_norm_deviation": self.max_norm_deviation,
            "feasibility": self.feasibility.to_dict(),
        }


def verify_decomposition(
    b: SymmetricMatrix,
    weights: Sequence[float],
    vectors: ArrayLike,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    progress: bool = False,
) -> VerificationReport:
    """Check B = sum c_i x_i x_i^T term by term.

    The intermediate operators B - c_1 x_1 x_1^T - ... are eigendecomposed
    afresh, so the reported minimum does not trust any solver bookkeeping.
    """
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        raise EmptyInput("Decomposition has no terms")
    x = np.asarray(vectors, dtype=float)
    if x.shape != (w.size, b.dim):
        raise DimensionMismatch(f"Expected {w.size} vectors of dimension {b.dim}, got shape {x.shape}")

    spectrum = eigh(b, tolerances)
    operator_norm = float(np.max(np.abs(spectrum.eigenvalues)))
    assembled = assemble_terms(w, x, b.dim)
    reconstruction_error = float(np.linalg.norm(assembled.entries - b.entries)) / max(b.frobenius_norm, 1.0)
    max_norm_deviation = float(np.max(np.abs(np.linalg.norm(x, axis=1) - 1.0)))

    residual = np.array(b.entries)
    min_intermediate = float("inf")
    for weight, vector in tqdm(zip(w, x), total=w.size, desc="Checking residuals", disable=not progress):
        residual -= weight * np.outer(vector, vector)
        min_intermediate = min(min_intermediate, eigh(SymmetricMatrix(residual), tolerances).min_eigenvalue)

    frame_vectors = x * np.sqrt(np.clip(w, 0.0, None))[:, None]
    lower, upper = frame_bounds(frame_vectors, tolerances)
    tight = upper - lower <= tolerances.reconstruction_tolerance(upper)

    report = VerificationReport(
        reconstruction_error=reconstruction_error,
        min_intermediate_eigenvalue=min_intermediate,
        frame_bounds=(lower, upper),
        tight=tight,
        frame_bound=upper if tight else None,
        max_norm_deviation=max_norm_deviation,
        feasibility=check_finite(spectrum.eigenvalues, w, tolerances),
        operator_norm=operator_norm,
    )
    logger.info(
        f"Verified {w.size} terms: reconstruction error {reconstruction_error:.3e}, "
        f"min intermediate eigenvalue {min_intermediate:.3e}"
    )
    return report


def verify_frame(
    frame: FrameSet,
    b: Optional[SymmetricMatrix] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    progress: bool = False,
) -> VerificationReport:
    """Verify a frame against ``b`` (its recorded frame operator by default)."""
    target = frame.frame_operator if b is None else b
    norms = np.linalg.norm(frame.vectors, axis=1)
    if np.any(norms == 0):
        raise EmptyInput("Frame contains a zero vector")
    return verify_decomposition(
        target, norms ** 2, frame.vectors / norms[:, None], tolerances, progress=progress,
    )
