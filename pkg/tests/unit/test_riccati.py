"""Unit tests for the Riccati solver and its sensitivities."""

import math

import numpy as np
import pytest

from pkcontrol.core.errors import InvalidParameterError, NotStabilizableError
from pkcontrol.core.riccati import (
    DareProblem,
    dare_jacobians,
    dare_jacobians_fd,
    dare_jacobians_printed_z3,
    dare_residual,
    lqr_gain,
    riccati_value_iterates,
    solve_dare,
)
from pkcontrol.core.tensor_ops import spectral_radius_below_one
from pkcontrol.harness.gradcheck import random_dare_problem, random_systems, relative_error

PHI = (1.0 + math.sqrt(5.0)) / 2.0


class TestDareProblem:
    """Tests for problem validation."""

    def test_scalars_are_promoted(self) -> None:
        """Scalar inputs become 1x1 matrices."""
        prob = DareProblem(1.0, 1.0, 1.0, 1.0)  # type: ignore[arg-type]
        assert prob.a.shape == (1, 1)
        assert (prob.n, prob.m) == (1, 1)

    def test_shape_mismatch_raises(self) -> None:
        """Inconsistent shapes are rejected."""
        with pytest.raises(InvalidParameterError):
            DareProblem(np.eye(2), np.ones((3, 1)), np.eye(2), np.eye(1))

    def test_asymmetric_q_raises(self) -> None:
        """q must be symmetric."""
        with pytest.raises(InvalidParameterError):
            DareProblem(np.eye(2), np.ones((2, 1)), np.array([[1.0, 0.5], [0.0, 1.0]]), np.eye(1))

    def test_indefinite_q_raises(self) -> None:
        """q must be positive semidefinite."""
        with pytest.raises(InvalidParameterError):
            DareProblem(np.eye(2), np.ones((2, 1)), np.diag([1.0, -1.0]), np.eye(1))

    def test_singular_r_raises(self) -> None:
        """r must be positive definite."""
        with pytest.raises(InvalidParameterError):
            DareProblem(np.eye(1), np.eye(1), np.eye(1), np.zeros((1, 1)))

    def test_semidefinite_q_is_accepted(self) -> None:
        """A zero state weight is allowed."""
        DareProblem(np.eye(2), np.ones((2, 1)), np.zeros((2, 2)), np.eye(1))


class TestSolveDare:
    """Tests for the value-iteration solver."""

    def test_scalar_golden_ratio(self, scalar_problem: DareProblem) -> None:
        """a = b = q = r = 1 gives P = φ and K = 1/φ."""
        sol = solve_dare(scalar_problem)
        assert sol.p[0, 0] == pytest.approx(PHI, abs=1e-10)
        assert sol.k[0, 0] == pytest.approx(1.0 / PHI, abs=1e-10)

    def test_double_integrator(self, double_integrator: DareProblem) -> None:
        """The double integrator converges to a small residual and a stable loop."""
        sol = solve_dare(double_integrator)
        assert sol.residual <= 1e-9
        a, b = double_integrator.a, double_integrator.b
        assert spectral_radius_below_one(a - b @ sol.k)
        np.testing.assert_allclose(sol.p, sol.p.T, atol=1e-12)

    def test_random_systems_are_solved(self, rng: np.random.Generator) -> None:
        """Randomized stabilizable systems reach residual 1e-9 and a stable loop."""
        for prob in random_systems(rng, 100):
            sol = solve_dare(prob)
            assert sol.residual <= 1e-9 * (1.0 + np.linalg.norm(sol.p))
            assert spectral_radius_below_one(prob.a - prob.b @ sol.k)

    def test_solution_is_positive_semidefinite(self, double_integrator: DareProblem) -> None:
        """The stabilizing solution is PSD."""
        sol = solve_dare(double_integrator)
        assert np.min(np.linalg.eigvalsh(sol.p)) >= -1e-12

    def test_gain_matches_formula(self, double_integrator: DareProblem) -> None:
        """K is (R + BᵀPB)⁻¹BᵀPA."""
        sol = solve_dare(double_integrator)
        np.testing.assert_allclose(sol.k, lqr_gain(double_integrator, sol.p), atol=1e-12)

    def test_warm_start_gives_same_solution(self, double_integrator: DareProblem) -> None:
        """Warm-starting from the solution converges immediately to it."""
        sol = solve_dare(double_integrator)
        warm = solve_dare(double_integrator, initial=sol.p)
        assert warm.iterations <= 2
        np.testing.assert_allclose(warm.p, sol.p, atol=1e-10)

    def test_uncontrollable_unstable_mode_raises(self) -> None:
        """An unstable mode the input cannot reach is not stabilizable."""
        prob = DareProblem(np.diag([1.2, 0.5]), np.array([[0.0], [1.0]]), np.eye(2), np.eye(1))
        with pytest.raises(NotStabilizableError):
            solve_dare(prob)

    def test_iteration_cap_raises(self, double_integrator: DareProblem) -> None:
        """Hitting the iteration cap is reported as not stabilizable."""
        with pytest.raises(NotStabilizableError):
            solve_dare(double_integrator, max_iterations=2)

    def test_residual_vanishes_at_solution(self, scalar_problem: DareProblem) -> None:
        """The DARE defect at P = φ is zero."""
        assert dare_residual(scalar_problem, np.array([[PHI]])) == pytest.approx(0.0, abs=1e-12)


class TestValueIterates:
    """Property tests on the value-iteration sequence."""

    def test_iterates_are_monotone(self, double_integrator: DareProblem) -> None:
        """Starting from Q, iterates increase in the Loewner order."""
        iterates = list(riccati_value_iterates(double_integrator, 30))
        for prev, nxt in zip(iterates, iterates[1:], strict=False):
            assert np.min(np.linalg.eigvalsh(nxt - prev)) >= -1e-10

    def test_first_iterate_is_q(self, double_integrator: DareProblem) -> None:
        """The sequence starts at P₀ = Q."""
        first = next(riccati_value_iterates(double_integrator, 0))
        np.testing.assert_array_equal(first, double_integrator.q)


class TestDareJacobians:
    """Tests for the closed-form sensitivities."""

    def test_scalar_implicit_derivative(self, scalar_problem: DareProblem) -> None:
        """dP/da at a = b = q = r = 1 equals the implicit-differentiation value."""
        sens = dare_jacobians(scalar_problem, solve_dare(scalar_problem))
        expected = 2.0 * (PHI - 1.0) / (2.0 / PHI - 1.0 / PHI**2)
        assert expected == pytest.approx(1.4472136, abs=1e-6)
        assert sens.dp_da[0, 0] == pytest.approx(expected, abs=1e-6)

    def test_fd_oracle_agrees_on_scalar_case(self, scalar_problem: DareProblem) -> None:
        """The finite-difference oracle reproduces the scalar value."""
        fd = dare_jacobians_fd(scalar_problem)
        analytic = dare_jacobians(scalar_problem, solve_dare(scalar_problem))
        assert fd.dp_da[0, 0] == pytest.approx(analytic.dp_da[0, 0], abs=1e-6)
        assert fd.dp_db[0, 0] == pytest.approx(analytic.dp_db[0, 0], abs=1e-6)

    def test_shapes(self, rng: np.random.Generator) -> None:
        """dP/dA is n² x n² and dP/dB is n² x nm."""
        prob = next(random_systems(rng, 1))
        sens = dare_jacobians(prob, solve_dare(prob))
        n, m = prob.n, prob.m
        assert sens.dp_da.shape == (n * n, n * n)
        assert sens.dp_db.shape == (n * n, n * m)

    def test_matches_finite_differences(self, rng: np.random.Generator) -> None:
        """Analytic Jacobians match central differences on random systems."""
        for prob in random_systems(rng, 10):
            sol = solve_dare(prob)
            analytic = dare_jacobians(prob, sol)
            fd = dare_jacobians_fd(prob)
            assert relative_error(analytic.dp_da, fd.dp_da) <= 1e-5
            assert relative_error(analytic.dp_db, fd.dp_db) <= 1e-5

    def test_random_3x3_system(self) -> None:
        """A stable 3x3 system matches the oracle entrywise."""
        rng = np.random.default_rng(3)
        prob = random_dare_problem(rng, 3, 1)
        prob = prob.with_dynamics(0.5 * prob.a / max(1.0, np.max(np.abs(prob.a))), prob.b)
        sol = solve_dare(prob)
        oracle = dare_jacobians_fd(prob)
        assert relative_error(dare_jacobians(prob, sol).dp_da, oracle.dp_da) <= 1e-5

    def test_printed_z3_misses_direct_terms(self, rng: np.random.Generator) -> None:
        """The gain-only Z₃ bracket disagrees with the oracle on dP/dB."""
        prob = next(random_systems(rng, 1))
        sol = solve_dare(prob)
        printed = dare_jacobians_printed_z3(prob, sol)
        fd = dare_jacobians_fd(prob)
        assert relative_error(printed.dp_db, fd.dp_db) > 1e-3
        np.testing.assert_allclose(printed.dp_da, dare_jacobians(prob, sol).dp_da, atol=1e-12)
