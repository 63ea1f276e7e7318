"""Tests for the rank-one decomposition and frame synthesis."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framesynth.core.decomposer import (
    SpectralState, decompose, decompose_operator, lemma_step, mixing_parameter, parseval_frame,
    synthesize_frame, tight_frame,
)
from framesynth.core.errors import (
    FFIViolated, Infeasible, InvalidWeights, NotPositive, PreconditionViolated,
)
from framesynth.core.feasibility import check_finite
from framesynth.core.models import StepKind, SymmetricMatrix
from framesynth.core.spectral import assemble, eigh


def assert_same_line(x, y, atol=1e-12):
    """x and y agree up to sign."""
    x, y = np.asarray(x), np.asarray(y)
    assert min(np.max(np.abs(x - y)), np.max(np.abs(x + y))) <= atol


def relative_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1.0)


class TestSpectralState:
    """Test SpectralState constructors and invariants."""

    def test_from_diagonal(self):
        """Test sorting, zero removal and coordinate eigenvectors."""
        s = SpectralState.from_diagonal([1.0, 0.0, 4.0])
        assert s.eigenvalues == (4.0, 1.0)
        assert s.rank == 2
        assert s.dim == 3
        np.testing.assert_array_equal(s.eigenvectors[0], [0.0, 0.0, 1.0])
        assert s.trace == 5.0

    def test_from_spectrum(self):
        """Test the positive part of an eigendecomposition."""
        s = SpectralState.from_spectrum(eigh(SymmetricMatrix.diagonal([2.0, 0.0, 3.0])))
        assert s.eigenvalues == (3.0, 2.0)
        np.testing.assert_allclose(s.to_matrix().entries, np.diag([2.0, 0.0, 3.0]))

    def test_from_spectrum_rejects_negative(self):
        """Test NotPositive for indefinite operators."""
        with pytest.raises(NotPositive) as exc:
            SpectralState.from_spectrum(eigh(SymmetricMatrix.diagonal([1.0, -1.0])))
        assert exc.value.min_eigenvalue == -1.0

    def test_rejects_increasing_eigenvalues(self):
        """Test the ordering invariant."""
        with pytest.raises(PreconditionViolated):
            SpectralState(eigenvalues=(1.0, 2.0), eigenvectors=(np.eye(2)[0], np.eye(2)[1]), dim=2)


class TestLemmaStep:
    """Test the single rank-reducing step."""

    def test_merge_five_and_one(self):
        """Test (5, 1) with c = 3: t = 1/6 and the remaining eigenvector."""
        s = SpectralState.from_diagonal([5.0, 1.0])
        assert mixing_parameter(5.0, 1.0, 3.0) == pytest.approx(1 / 6, abs=1e-12)
        x, s2 = lemma_step(s, 0, 3.0)
        assert_same_line(x, [math.sqrt(5 / 6), math.sqrt(1 / 6)])
        assert s2.eigenvalues == pytest.approx((3.0,))
        assert_same_line(s2.eigenvectors[0], [math.sqrt(5 / 6), -math.sqrt(1 / 6)])

    def test_equal_eigenvalues(self):
        """Test t = 0 and x = e_j when b_j = b_{j+1}."""
        s = SpectralState.from_diagonal([2.0, 2.0])
        x, s2 = lemma_step(s, 0, 2.0)
        np.testing.assert_array_equal(x, [1.0, 0.0])
        assert s2.eigenvalues == (2.0,)
        assert_same_line(s2.eigenvectors[0], [0.0, 1.0])

    def test_remainder_is_psd_rank_one(self):
        """Test diag(4,2) - 3 x x^T is positive of rank one with trace 3."""
        s = SpectralState.from_diagonal([4.0, 2.0])
        x, s2 = lemma_step(s, 0, 3.0)
        remainder = np.diag([4.0, 2.0]) - 3.0 * np.outer(x, x)
        values = np.linalg.eigvalsh(remainder)
        assert values[0] == pytest.approx(0.0, abs=1e-12)
        assert values[1] == pytest.approx(3.0, abs=1e-12)
        np.testing.assert_allclose(s2.to_matrix().entries, remainder, atol=1e-12)

    def test_closed_form_against_determinant_grid(self):
        """Test the closed form lands on the zero of det(diag(b) - c x x^T) found by scanning t."""
        b_hi, b_lo, c = 4.0, 2.0, 3.0
        grid = np.linspace(0.0, 1.0, 100001)
        det = b_hi * b_lo - c * (grid * b_hi + (1 - grid) * b_lo)
        t_grid = grid[np.argmin(np.abs(det))]
        assert mixing_parameter(b_hi, b_lo, c) == pytest.approx(t_grid, abs=1e-5)

    @given(st.lists(st.floats(min_value=0.1, max_value=10.0), min_size=3, max_size=3))
    @settings(deadline=None, max_examples=200)
    def test_mixing_parameter_zeroes_determinant(self, values):
        """Test det = b_hi b_lo - c (t b_hi + (1 - t) b_lo) vanishes."""
        b_lo, c, b_hi = sorted(values)
        t = mixing_parameter(b_hi, b_lo, c)
        assert 0.0 <= t <= 1.0
        det = b_hi * b_lo - c * (t * b_hi + (1 - t) * b_lo)
        assert abs(det) <= 1e-12 * b_hi * b_hi

    def test_random_state_update(self, rng, random_state):
        """Test conservation, ordering and orthonormality on random states."""
        for _ in range(50):
            n = int(rng.integers(2, 10))
            s = random_state(rng, rng.uniform(0.5, 10.0, n), dim=n + 1)
            j = int(rng.integers(0, n - 1))
            c = float(rng.uniform(s.eigenvalues[j + 1], s.eigenvalues[j]))
            x, s2 = lemma_step(s, j, c)

            assert s2.rank == s.rank - 1
            assert s2.trace == pytest.approx(s.trace - c, abs=1e-10 * s.trace)
            assert list(s2.eigenvalues) == sorted(s2.eigenvalues, reverse=True)
            assert s2.eigenvalues[j] == pytest.approx(s.eigenvalues[j] + s.eigenvalues[j + 1] - c)
            v = np.array(s2.eigenvectors)
            np.testing.assert_allclose(v @ v.T, np.eye(s2.rank), atol=1e-12)
            expected = s.to_matrix().entries - c * np.outer(x, x)
            np.testing.assert_allclose(s2.to_matrix().entries, expected, atol=1e-12 * s.trace)

    def test_preconditions(self):
        """Test weights outside [b_{j+1}, b_j] and invalid positions."""
        s = SpectralState.from_diagonal([5.0, 1.0])
        with pytest.raises(PreconditionViolated):
            lemma_step(s, 0, 6.0)
        with pytest.raises(PreconditionViolated):
            lemma_step(s, 0, 0.5)
        with pytest.raises(PreconditionViolated):
            lemma_step(s, 1, 1.0)


class TestDecompose:
    """Test the full decomposition."""

    def test_diag_five_four(self, example1):
        """Test the worked decomposition of diag(5,4) with weights (3,3,2,1)."""
        s = SpectralState.from_diagonal(example1["eigenvalues"])
        d = decompose(s, example1["weights"])

        assert d.weights.tolist() == [3.0, 3.0, 2.0, 1.0]
        assert [step.kind for step in d.steps] == [
            StepKind.CASE2, StepKind.CASE1, StepKind.RANK_ONE, StepKind.RANK_ONE,
        ]
        assert d.steps[1].mixing == pytest.approx(1 / 6, abs=1e-12)

        z = [math.sqrt(5 / 6), -math.sqrt(1 / 6)]
        expected = [[0.0, 1.0], [math.sqrt(5 / 6), math.sqrt(1 / 6)], z, z]
        for vector, target in zip(d.vectors, expected):
            assert_same_line(vector, target)
        np.testing.assert_allclose(assemble(d).entries, np.diag([5.0, 4.0]), atol=1e-12)

    def test_partial_sum_violation(self, example2):
        """Test rejection with the embedded report."""
        s = SpectralState.from_diagonal(example2["eigenvalues"])
        with pytest.raises(Infeasible) as exc:
            decompose(s, example2["weights"])
        assert exc.value.report.violating_p == 2

    def test_rank_one(self):
        """Test a rank-one operator with a single weight."""
        d = decompose(SpectralState.from_diagonal([2.5]), [2.5])
        assert len(d) == 1
        np.testing.assert_array_equal(d.vectors[0], [1.0])

    def test_source_indices(self, example1):
        """Test the permutation back to caller order."""
        d = decompose(SpectralState.from_diagonal(example1["eigenvalues"]), [1.0, 3.0, 2.0, 3.0])
        assert d.source_indices == (1, 3, 2, 0)
        assert d.weights.tolist() == [3.0, 3.0, 2.0, 1.0]

    def test_identity_with_unit_weights(self):
        """Test I_3 with weights (1,1,1) gives a standard basis up to sign."""
        d = decompose_operator(SymmetricMatrix.identity(3), [1.0, 1.0, 1.0])
        np.testing.assert_allclose(np.abs(d.vectors), np.eye(3), atol=1e-12)

    def test_random_feasible_instances(self, rng, random_state, schur_weights):
        """Test 1000 random feasible instances: reconstruction, positivity, trace and rank bookkeeping."""
        for _ in range(1000):
            n = int(rng.integers(1, 21))
            k = int(rng.integers(n, 101))
            b = rng.uniform(1e-3, 10.0, n)
            dim = n + int(rng.integers(0, 3))
            s = random_state(rng, b, dim=dim)
            weights = schur_weights(rng, s.eigenvalues, k)
            target = s.to_matrix().entries
            norm = float(np.max(b))

            d = decompose(s, weights)

            assert relative_error(assemble(d).entries, target) <= 1e-9
            trace, rank, case2 = s.trace, s.rank, 0
            for step in d.steps:
                assert step.min_eigenvalue_after >= -1e-9 * norm
                assert step.trace_after == pytest.approx(trace - step.weight, abs=1e-10 * max(s.trace, 1.0))
                if step.kind is StepKind.CASE1:
                    assert step.rank_after == rank - 1
                if step.kind is StepKind.CASE2:
                    case2 += 1
                trace, rank = step.trace_after, step.rank_after
            assert rank == 0
            assert case2 <= k - n

    def test_iff_boundary(self, rng, random_state, schur_weights):
        """Test decompose succeeds exactly when check_finite accepts."""
        for trial in range(1000):
            n = int(rng.integers(2, 12))
            k = int(rng.integers(n, 40))
            s = random_state(rng, rng.uniform(0.1, 10.0, n))
            b = s.eigenvalues

            if trial % 2:
                weights = schur_weights(rng, b, k)
            else:
                # Concentrate extra mass on the top p weights so the p-th partial sum overshoots.
                p = int(rng.integers(1, n))
                head, rest = sum(b[:p]), sum(b[p:])
                delta = max(1e-6, rng.uniform(0.0, 0.5) * rest)
                weights = [(head + delta) / p] * p + [(rest - delta) / (k - p)] * (k - p)

            feasible = check_finite(b, weights).feasible
            try:
                decompose(s, weights)
                decomposed = True
            except Infeasible:
                decomposed = False
            assert feasible == decomposed
            assert feasible == bool(trial % 2)


class TestFrames:
    """Test frame synthesis."""

    def test_diag_five_four_frame(self, example1_matrix):
        """Test norms (sqrt3, sqrt3, sqrt2, 1) give a frame with frame operator diag(5,4)."""
        frame = synthesize_frame(example1_matrix, [math.sqrt(3), math.sqrt(3), math.sqrt(2), 1.0])
        assert len(frame) == 4
        np.testing.assert_allclose(frame.frame_operator.entries, np.diag([5.0, 4.0]), atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(frame.vectors, axis=1), frame.norms, atol=1e-12)
        assert frame.bounds == pytest.approx((4.0, 5.0))

    def test_identity_orthonormal_basis(self):
        """Test B = I_2 with unit norms."""
        frame = synthesize_frame(SymmetricMatrix.identity(2), [1.0, 1.0])
        np.testing.assert_allclose(frame.vectors @ frame.vectors.T, np.eye(2), atol=1e-12)
        assert frame.bounds == pytest.approx((1.0, 1.0))
        assert frame.is_tight()

    def test_diag_3_1(self):
        """Test B = diag(3,1) with norms (sqrt2, 1, 1)."""
        frame = synthesize_frame(SymmetricMatrix.diagonal([3.0, 1.0]), [math.sqrt(2), 1.0, 1.0])
        z = frame.vectors
        np.testing.assert_allclose(z.T @ z, np.diag([3.0, 1.0]), atol=1e-12)

    def test_not_positive(self):
        """Test indefinite operators are rejected."""
        with pytest.raises(NotPositive):
            synthesize_frame(SymmetricMatrix.diagonal([2.0, -1.0]), [1.0, 1.0])

    def test_infeasible_norms(self, example1_matrix):
        """Test norms whose squares exceed the largest eigenvalue."""
        with pytest.raises(Infeasible):
            synthesize_frame(example1_matrix, [3.0, 0.0001])

    def test_random_operator(self, rng, random_orthogonal, schur_weights):
        """Test synthesis from dense positive definite matrices."""
        for _ in range(20):
            n = int(rng.integers(2, 8))
            q = random_orthogonal(rng, n)
            b = rng.uniform(0.5, 5.0, n)
            m = SymmetricMatrix(q @ np.diag(b) @ q.T)
            norms = np.sqrt(schur_weights(rng, b, n + int(rng.integers(0, 10))))
            frame = synthesize_frame(m, norms)
            assert relative_error(frame.frame_operator.entries, m.entries) <= 1e-9
            assert frame.bounds[0] == pytest.approx(b.min(), rel=1e-9)
            assert frame.bounds[1] == pytest.approx(b.max(), rel=1e-9)


class TestTightFrames:
    """Test tight and Parseval frames."""

    def test_three_vectors_in_plane(self):
        """Test n = 2, a = (1,1,1): frame operator 1.5 I."""
        frame = tight_frame(2, [1.0, 1.0, 1.0])
        np.testing.assert_allclose(frame.frame_operator.entries, 1.5 * np.eye(2), atol=1e-10)
        np.testing.assert_allclose(frame.norms, [1.0, 1.0, 1.0])

    def test_orthonormal_basis(self):
        """Test n = 3, a = (1,1,1): an orthonormal basis."""
        frame = tight_frame(3, [1.0, 1.0, 1.0])
        np.testing.assert_allclose(frame.vectors @ frame.vectors.T, np.eye(3), atol=1e-12)

    def test_ffi_violated(self):
        """Test n = 2, a = (2,1)."""
        with pytest.raises(FFIViolated) as exc:
            tight_frame(2, [2.0, 1.0])
        assert exc.value.frame_bound == pytest.approx(2.5)

    @pytest.mark.parametrize("n", range(2, 9))
    def test_random_norms(self, rng, n):
        """Test ||S - Lambda I||_F <= 1e-9 Lambda for random norms meeting the inequality."""
        for _ in range(20):
            a = rng.uniform(0.3, 1.5, int(rng.integers(n, 4 * n)))
            frame_bound = float(np.sum(a ** 2) / n)
            if np.max(a ** 2) > frame_bound:
                continue
            frame = tight_frame(n, a)
            error = np.linalg.norm(frame.frame_operator.entries - frame_bound * np.eye(n))
            assert error <= 1e-9 * frame_bound
            np.testing.assert_allclose(np.sort(np.linalg.norm(frame.vectors, axis=1)), np.sort(a), rtol=1e-10)

    def test_parseval(self):
        """Test a Parseval frame of four vectors for the plane."""
        frame = parseval_frame(2, [1 / math.sqrt(2)] * 4)
        np.testing.assert_allclose(frame.frame_operator.entries, np.eye(2), atol=1e-12)

    def test_parseval_wrong_total(self):
        """Test squared norms that do not add up to the dimension."""
        with pytest.raises(InvalidWeights):
            parseval_frame(2, [1.0, 1.0, 1.0])
