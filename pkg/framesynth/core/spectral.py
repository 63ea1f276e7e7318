"""Symmetric eigendecomposition, operator assembly and frame bounds."""

import logging
import math
from typing import Sequence, Tuple, Union

import numpy as np

from .errors import DimensionMismatch, EmptyInput, NonConvergence
from .models import (
    DEFAULT_TOLERANCES, RankOneDecomposition, Spectrum, SymmetricMatrix, Tolerances,
)


logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence[Sequence[float]]]


def _off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """Apply one Jacobi rotation in place, annihilating a[p, q]."""
    apq = a[p, q]
    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
    c = 1.0 / math.hypot(t, 1.0)
    s = t * c

    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q

    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p - s * row_q
    a[q, :] = s * row_p + c * row_q
    a[p, q] = a[q, p] = 0.0

    vec_p = v[:, p].copy()
    vec_q = v[:, q].copy()
    v[:, p] = c * vec_p - s * vec_q
    v[:, q] = s * vec_p + c * vec_q


def jacobi_eigenpairs(entries: np.ndarray, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi iteration; returns unsorted eigenvalues and eigenvector columns."""
    a = np.array(entries, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    threshold = tolerances.jacobi_offdiag * float(np.linalg.norm(a))

    for sweep in range(tolerances.jacobi_max_sweeps + 1):
        off = _off_diagonal_norm(a)
        if off <= threshold:
            logger.debug(f"Jacobi converged after {sweep} sweeps (dim={n}, off-diagonal={off:.3e})")
            return np.diag(a).copy(), v
        if sweep == tolerances.jacobi_max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] != 0.0:
                    _rotate(a, v, p, q)

    logger.error(f"Jacobi eigensolver did not converge in {tolerances.jacobi_max_sweeps} sweeps")
    raise NonConvergence(
        f"Off-diagonal norm {_off_diagonal_norm(a):.3e} still above {threshold:.3e} "
        f"after {tolerances.jacobi_max_sweeps} sweeps"
    )


def eigh(m: SymmetricMatrix, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Spectrum:
    """Eigendecomposition of a symmetric matrix with eigenvalues in nonincreasing order.

    Eigenvalues whose magnitude is below ``tolerances.rank * max(|lambda|, 1)``
    are kept in the result but flagged by ``Spectrum.numerically_zero``.
    Ties are broken by a stable sort, so equal eigenvalues keep the order in
    which the solver produced them.
    """
    values, vectors = jacobi_eigenpairs(m.entries, tolerances)
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]

    gram_error = float(np.max(np.abs(vectors.T @ vectors - np.eye(m.dim))))
    if gram_error > tolerances.orthogonality:
        raise NonConvergence(f"Eigenvectors lost orthogonality (Gram deviation {gram_error:.3e})")

    scale = float(np.max(np.abs(values)))
    return Spectrum(values, vectors, rank_tolerance=tolerances.rank_tolerance(scale))


def assemble_terms(weights: Sequence[float], vectors: ArrayLike, dim: int) -> SymmetricMatrix:
    """Sum of w_i v_i v_i^T without any validation of weights or norms."""
    w = np.asarray(weights, dtype=float)
    v = np.asarray(vectors, dtype=float).reshape(len(w), -1) if len(w) else np.zeros((0, dim))
    if v.shape[1] != dim:
        raise DimensionMismatch(f"Vectors of dimension {v.shape[1]} assembled into dimension {dim}")
    return SymmetricMatrix((v.T * w) @ v)


def assemble(d: RankOneDecomposition) -> SymmetricMatrix:
    """The operator sum_i c_i x_i x_i^T of a decomposition."""
    return assemble_terms(d.weights, d.vectors, d.dim)


def frame_bounds(vectors: ArrayLike, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Tuple[float, float]:
    """Optimal frame bounds (C, D) of a finite family of vectors.

    C is zero when the vectors do not span the space.
    """
    try:
        v = np.asarray(vectors, dtype=float)
    except ValueError as e:
        raise DimensionMismatch("Frame vectors must share one dimension") from e
    if v.size == 0:
        raise EmptyInput("Cannot compute frame bounds of an empty family")
    if v.ndim != 2:
        raise DimensionMismatch("Frame vectors must share one dimension")

    spectrum = eigh(SymmetricMatrix(v.T @ v), tolerances)
    upper = spectrum.max_eigenvalue
    lower = spectrum.min_eigenvalue
    if lower <= spectrum.rank_tolerance:
        lower = 0.0
    return float(lower), float(upper)
