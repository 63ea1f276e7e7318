"""Test configuration and fixtures for framesynth tests."""

import json

import numpy as np
import pytest

from framesynth.core.decomposer import SpectralState
from framesynth.core.models import DEFAULT_TOLERANCES, SymmetricMatrix


@pytest.fixture
def tolerances():
    """Default tolerances."""
    return DEFAULT_TOLERANCES


@pytest.fixture
def example1():
    """diag(5, 4) with weights (3, 3, 2, 1)."""
    return {"eigenvalues": [5.0, 4.0], "weights": [3.0, 3.0, 2.0, 1.0]}


@pytest.fixture
def example2():
    """diag(5, 2, 2) with weights (4, 4, 1), infeasible at p = 2."""
    return {"eigenvalues": [5.0, 2.0, 2.0], "weights": [4.0, 4.0, 1.0]}


@pytest.fixture
def rng():
    """Seeded generator so random suites are reproducible."""
    return np.random.default_rng(20240611)


@pytest.fixture
def random_orthogonal():
    """Factory for random orthogonal matrices."""
    def make(rng, n):
        q, r = np.linalg.qr(rng.standard_normal((n, n)))
        return q * np.sign(np.diag(r))
    return make


@pytest.fixture
def random_state(random_orthogonal):
    """Factory for spectral states with random eigenvectors, bypassing the eigensolver."""
    def make(rng, eigenvalues, dim=None):
        values = np.sort(np.asarray(eigenvalues, dtype=float))[::-1]
        dim = dim or len(values)
        q = random_orthogonal(rng, dim)
        return SpectralState(
            eigenvalues=tuple(float(v) for v in values),
            eigenvectors=tuple(q[:, i].copy() for i in range(len(values))),
            dim=dim,
        )
    return make


@pytest.fixture
def schur_weights(random_orthogonal):
    """Factory for feasible weights: the diagonal of a random rotation of diag(b, 0, ..., 0)."""
    def make(rng, eigenvalues, k):
        padded = np.zeros(k)
        padded[:len(eigenvalues)] = eigenvalues
        q = random_orthogonal(rng, k)
        return list((q ** 2) @ padded)
    return make


@pytest.fixture
def write_problem(tmp_path):
    """Write a problem mapping to a JSON file and return its path."""
    def write(data, name="problem.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)
    return write


@pytest.fixture
def example1_matrix(example1):
    return SymmetricMatrix.diagonal(example1["eigenvalues"])
