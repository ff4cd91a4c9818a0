"""Unit tests for the dense matrix kernels.

Tests for:
- vec/unvec and the Kronecker identity
- Commutation matrices
- Pivoted linear solves
- The repeated-squaring stability test
"""

import numpy as np
import pytest

from pkcontrol.core.errors import InvalidParameterError, SingularMatrixError
from pkcontrol.core.tensor_ops import (
    as_matrix,
    commutation_matrix,
    kron,
    solve_linear,
    spectral_radius_below_one,
    unvec,
    vec,
)


class TestAsMatrix:
    """Tests for input normalization."""

    def test_scalar_becomes_1x1(self) -> None:
        """A scalar is promoted to a 1x1 matrix."""
        assert as_matrix(3.0).shape == (1, 1)

    def test_vector_becomes_column(self) -> None:
        """A 1-D input becomes a column vector."""
        assert as_matrix([1.0, 2.0, 3.0]).shape == (3, 1)

    def test_rejects_nan(self) -> None:
        """Non-finite entries are rejected."""
        with pytest.raises(InvalidParameterError):
            as_matrix([[1.0, np.nan]])

    def test_rejects_3d(self) -> None:
        """Inputs with more than two dimensions are rejected."""
        with pytest.raises(InvalidParameterError):
            as_matrix(np.zeros((2, 2, 2)))


class TestVec:
    """Tests for column-major vectorization."""

    def test_vec_stacks_columns(self) -> None:
        """vec stacks columns, not rows."""
        m = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(vec(m).ravel(), [1.0, 3.0, 2.0, 4.0])

    def test_unvec_inverts_vec(self, rng: np.random.Generator) -> None:
        """unvec restores the original matrix."""
        m = rng.normal(size=(3, 4))
        np.testing.assert_array_equal(unvec(vec(m), 3, 4), m)

    def test_kronecker_identity(self, rng: np.random.Generator) -> None:
        """vec(A X B) equals kron(Bᵀ, A) vec(X)."""
        a = rng.normal(size=(3, 2))
        x = rng.normal(size=(2, 4))
        b = rng.normal(size=(4, 5))
        np.testing.assert_allclose(vec(a @ x @ b), kron(b.T, a) @ vec(x), atol=1e-12)

    def test_kron_block_structure(self) -> None:
        """Block (i, j) of kron(a, b) is a[i, j] * b."""
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.eye(2)
        np.testing.assert_array_equal(kron(a, b)[2:, :2], 3.0 * b)


class TestCommutationMatrix:
    """Tests for the vec-transpose permutation."""

    def test_maps_vec_to_vec_transpose(self, rng: np.random.Generator) -> None:
        """V vec(X) equals vec(Xᵀ) for a rectangular X."""
        x = rng.normal(size=(3, 2))
        v = commutation_matrix(3, 2)
        np.testing.assert_array_equal(v @ vec(x), vec(x.T))

    def test_is_permutation(self) -> None:
        """Exactly one 1 per row and per column."""
        v = commutation_matrix(4, 3)
        np.testing.assert_array_equal(v.sum(axis=0), np.ones(12))
        np.testing.assert_array_equal(v.sum(axis=1), np.ones(12))
        assert set(np.unique(v)) == {0.0, 1.0}

    def test_square_case_is_involution(self) -> None:
        """For square matrices, transposing twice is the identity."""
        v = commutation_matrix(3, 3)
        np.testing.assert_array_equal(v @ v, np.eye(9))

    def test_rejects_empty(self) -> None:
        """Zero dimensions are rejected."""
        with pytest.raises(InvalidParameterError):
            commutation_matrix(0, 3)


class TestSolveLinear:
    """Tests for the LU solve with the singularity check."""

    def test_residual_on_random_systems(self, rng: np.random.Generator) -> None:
        """Random 6x6 systems are solved to a 1e-10 relative residual."""
        for _ in range(20):
            a = rng.normal(size=(6, 6))
            b = rng.normal(size=(6, 3))
            x = solve_linear(a, b)
            residual = np.linalg.norm(a @ x - b)
            assert residual <= 1e-10 * (1.0 + np.linalg.norm(b))

    def test_vector_rhs_keeps_shape(self) -> None:
        """A 1-D right-hand side yields a 1-D solution."""
        x = solve_linear(np.diag([2.0, 4.0]), np.array([2.0, 2.0]))
        np.testing.assert_allclose(x, [1.0, 0.5])

    def test_singular_matrix_raises(self) -> None:
        """A rank-deficient matrix raises SingularMatrixError."""
        a = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(SingularMatrixError):
            solve_linear(a, np.ones(2))

    def test_zero_matrix_raises(self) -> None:
        """The zero matrix is singular."""
        with pytest.raises(SingularMatrixError):
            solve_linear(np.zeros((2, 2)), np.ones(2))

    def test_non_square_raises(self) -> None:
        """Non-square coefficient matrices are rejected."""
        with pytest.raises(InvalidParameterError):
            solve_linear(np.ones((2, 3)), np.ones(2))

    def test_row_mismatch_raises(self) -> None:
        """The right-hand side must have matching rows."""
        with pytest.raises(InvalidParameterError):
            solve_linear(np.eye(2), np.ones(3))


class TestSpectralRadius:
    """Tests for the repeated-squaring stability test."""

    def test_contraction_is_stable(self) -> None:
        """A matrix with spectral radius 0.9 is classified stable."""
        assert spectral_radius_below_one(np.diag([0.9, -0.5]))

    def test_expansion_is_unstable(self) -> None:
        """A matrix with an eigenvalue above one is unstable."""
        assert not spectral_radius_below_one(np.diag([1.01, 0.1]))

    def test_unit_circle_is_unstable(self) -> None:
        """A rotation (eigenvalues on the unit circle) is unstable."""
        c, s = np.cos(0.3), np.sin(0.3)
        assert not spectral_radius_below_one(np.array([[c, -s], [s, c]]))

    def test_nilpotent_is_stable(self) -> None:
        """Nilpotent matrices are stable despite a large norm."""
        assert spectral_radius_below_one(np.array([[0.0, 100.0], [0.0, 0.0]]))

    def test_huge_nilpotent_is_stable(self) -> None:
        """Entries large enough to overflow squaring do not make a nilpotent matrix unstable."""
        assert spectral_radius_below_one(np.array([[0.0, 1e200], [0.0, 0.0]]))

    def test_huge_entries_follow_eigenvalues(self) -> None:
        """Past the overflow guard the eigenvalues decide."""
        assert spectral_radius_below_one(np.array([[0.5, 1e200], [0.0, 0.5]]))
        assert not spectral_radius_below_one(np.array([[1.01, 1e200], [0.0, 0.5]]))

    def test_non_square_raises(self) -> None:
        """Non-square input is rejected."""
        with pytest.raises(InvalidParameterError):
            spectral_radius_below_one(np.ones((2, 3)))
