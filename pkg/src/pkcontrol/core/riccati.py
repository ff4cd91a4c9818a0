"""Discrete algebraic Riccati equation: solution, LQR gain and sensitivities.

The stabilizing solution of

    P = Q + AᵀPA − AᵀPB (R + BᵀPB)⁻¹ BᵀPA

is computed by value iteration from P₀ = Q. The Jacobians of vec P with
respect to vec A and vec B are assembled in closed form from Kronecker
products and checked against central finite differences.
"""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from pkcontrol.core.errors import InvalidParameterError, NotStabilizableError, SingularMatrixError
from pkcontrol.core.models import FloatArray
from pkcontrol.core.tensor_ops import (
    as_matrix,
    commutation_matrix,
    kron,
    solve_linear,
    spectral_radius_below_one,
    unvec,
    vec,
)
from pkcontrol.utils.logging import get_logger

logger = get_logger(__name__)

MAX_ITERATIONS = 10_000
CONVERGENCE_TOL = 1e-12
SYMMETRY_TOL = 1e-10
FD_STEP = 1e-6


@dataclass(frozen=True, eq=False)
class DareProblem:
    """Discrete-time LQR problem data.

    Attributes:
        a: State matrix, n x n.
        b: Input matrix, n x m.
        q: State cost weight, symmetric positive semidefinite.
        r: Input cost weight, symmetric positive definite.
    """

    a: FloatArray
    b: FloatArray
    q: FloatArray
    r: FloatArray

    def __post_init__(self) -> None:
        a = as_matrix(self.a, "a")
        b = as_matrix(self.b, "b")
        q = as_matrix(self.q, "q")
        r = as_matrix(self.r, "r")
        n, m = a.shape[0], b.shape[1]
        if a.shape != (n, n) or b.shape != (n, m) or q.shape != (n, n) or r.shape != (m, m):
            raise InvalidParameterError(
                f"inconsistent shapes a{a.shape} b{b.shape} q{q.shape} r{r.shape}"
            )
        if not np.allclose(q, q.T, atol=SYMMETRY_TOL, rtol=0.0):
            raise InvalidParameterError("q must be symmetric")
        if not np.allclose(r, r.T, atol=SYMMETRY_TOL, rtol=0.0):
            raise InvalidParameterError("r must be symmetric")
        shift = 1e-10 * (1.0 + float(np.linalg.norm(q)))
        try:
            np.linalg.cholesky(q + shift * np.eye(n))
        except np.linalg.LinAlgError as e:
            raise InvalidParameterError("q must be positive semidefinite") from e
        try:
            np.linalg.cholesky(r)
        except np.linalg.LinAlgError as e:
            raise InvalidParameterError("r must be positive definite") from e
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return int(self.a.shape[0])

    @property
    def m(self) -> int:
        return int(self.b.shape[1])

    def with_dynamics(self, a: FloatArray, b: FloatArray) -> DareProblem:
        """Same weights, different dynamics."""
        return DareProblem(a, b, self.q, self.r)


@dataclass(frozen=True, eq=False)
class DareSolution:
    p: FloatArray
    k: FloatArray
    iterations: int
    residual: float


@dataclass(frozen=True, eq=False)
class DareSensitivity:
    """Jacobians d vec P / d vec A (n² x n²) and d vec P / d vec B (n² x nm)."""

    dp_da: FloatArray
    dp_db: FloatArray


def dare_residual(prob: DareProblem, p: FloatArray) -> float:
    """Frobenius norm of the DARE defect at ``p``."""
    a, b = prob.a, prob.b
    pa = p @ a
    gain_rhs = b.T @ pa
    middle = solve_linear(prob.r + b.T @ p @ b, gain_rhs)
    defect = p - prob.q - a.T @ pa + pa.T @ b @ middle
    return float(np.linalg.norm(defect))


def lqr_gain(prob: DareProblem, p: FloatArray) -> FloatArray:
    """K = (R + BᵀPB)⁻¹ BᵀPA, shape m x n.

    Raises:
        SingularMatrixError: If R + BᵀPB is not invertible.
    """
    b = prob.b
    return solve_linear(prob.r + b.T @ p @ b, b.T @ p @ prob.a)


def riccati_step(prob: DareProblem, p: FloatArray) -> FloatArray:
    """One application of the DARE right-hand side, symmetrized."""
    a = prob.a
    pa = p @ a
    k = lqr_gain(prob, p)
    nxt = prob.q + a.T @ pa - pa.T @ prob.b @ k
    return (nxt + nxt.T) / 2.0


def riccati_value_iterates(prob: DareProblem, count: int) -> Iterator[FloatArray]:
    """Yield P₀ = Q and the next ``count`` value-iteration iterates."""
    p = prob.q.copy()
    yield p
    for _ in range(count):
        p = riccati_step(prob, p)
        yield p


def _hewer_polish(prob: DareProblem, p: FloatArray, steps: int) -> FloatArray:
    """Newton (Hewer) refinement: solve the closed-loop Lyapunov equation."""
    n = prob.n
    eye = np.eye(n * n)
    best, best_residual = p, dare_residual(prob, p)
    current = p
    for _ in range(steps):
        k = lqr_gain(prob, current)
        closed = prob.a - prob.b @ k
        rhs = vec(prob.q + k.T @ prob.r @ k)
        try:
            solved = unvec(solve_linear(eye - kron(closed.T, closed.T), rhs), n, n)
        except SingularMatrixError:
            break
        current = (solved + solved.T) / 2.0
        residual = dare_residual(prob, current)
        if residual < best_residual:
            best, best_residual = current, residual
    return best


def solve_dare(
    prob: DareProblem,
    initial: FloatArray | None = None,
    max_iterations: int = MAX_ITERATIONS,
    tol: float = CONVERGENCE_TOL,
    polish_steps: int = 2,
) -> DareSolution:
    """Stabilizing DARE solution by value iteration.

    Args:
        prob: Problem data.
        initial: Optional warm start; defaults to P₀ = Q.
        max_iterations: Iteration cap.
        tol: Stop when ``||ΔP||_F <= tol * (1 + ||P||_F)``.
        polish_steps: Newton refinement steps applied after convergence.

    Raises:
        NotStabilizableError: If the iteration does not converge within the
            cap, leaves the finite range, or the closed loop is not stable.
    """
    p = prob.q.copy() if initial is None else np.array(initial, dtype=np.float64)
    iterations = 0
    converged = False
    while iterations < max_iterations:
        try:
            nxt = riccati_step(prob, p)
        except SingularMatrixError as e:
            raise NotStabilizableError(f"R + BᵀPB became singular: {e}") from e
        iterations += 1
        if not np.all(np.isfinite(nxt)):
            raise NotStabilizableError(f"value iteration diverged after {iterations} steps")
        delta = float(np.linalg.norm(nxt - p))
        p = nxt
        if delta <= tol * (1.0 + float(np.linalg.norm(p))):
            converged = True
            break
    if not converged:
        raise NotStabilizableError(f"value iteration did not converge in {max_iterations} steps")

    if polish_steps > 0:
        p = _hewer_polish(prob, p, polish_steps)
    k = lqr_gain(prob, p)
    if not spectral_radius_below_one(prob.a - prob.b @ k):
        raise NotStabilizableError("closed loop a - b k is not stable")
    return DareSolution(p=p, k=k, iterations=iterations, residual=dare_residual(prob, p))


@dataclass(frozen=True, eq=False)
class _SensitivityTerms:
    at_kron_at: FloatArray
    pb: FloatArray
    m1: FloatArray
    m2: FloatArray
    s: FloatArray


def _terms(prob: DareProblem, sol: DareSolution) -> _SensitivityTerms:
    p, b = sol.p, prob.b
    pb = p @ b
    m3 = prob.r + b.T @ pb
    m2 = solve_linear(m3, np.eye(prob.m))
    s = pb @ m2 @ b.T
    m1 = p - s @ p
    return _SensitivityTerms(at_kron_at=kron(prob.a.T, prob.a.T), pb=pb, m1=m1, m2=m2, s=s)


def _assemble_z1(prob: DareProblem, t: _SensitivityTerms) -> FloatArray:
    n = prob.n
    eye_n = np.eye(n)
    bt = prob.b.T
    bracket = (
        np.eye(n * n)
        - kron(t.s, eye_n)
        + kron(t.pb, t.pb) @ kron(t.m2, t.m2) @ kron(bt, bt)
        - kron(eye_n, t.s)
    )
    return np.eye(n * n) - t.at_kron_at @ bracket


def _assemble_z2(prob: DareProblem, t: _SensitivityTerms) -> FloatArray:
    n = prob.n
    return (commutation_matrix(n, n) + np.eye(n * n)) @ kron(np.eye(n), prob.a.T @ t.m1)


def _z3_gain_term(prob: DareProblem, sol: DareSolution, t: _SensitivityTerms) -> FloatArray:
    m = prob.m
    return (
        kron(t.pb, t.pb)
        @ kron(t.m2, t.m2)
        @ (np.eye(m * m) + commutation_matrix(m, m))
        @ kron(np.eye(m), prob.b.T @ sol.p)
    )


def _assemble_z3(prob: DareProblem, sol: DareSolution, t: _SensitivityTerms) -> FloatArray:
    # Printed bracket completed with the direct dB terms of d(PBM₂BᵀP)
    n = prob.n
    direct = (np.eye(n * n) + commutation_matrix(n, n)) @ kron(t.pb @ t.m2, sol.p)
    return t.at_kron_at @ (_z3_gain_term(prob, sol, t) - direct)


def dare_jacobians(prob: DareProblem, sol: DareSolution) -> DareSensitivity:
    """Closed-form d vec P / d vec A = Z₁⁻¹Z₂ and d vec P / d vec B = Z₁⁻¹Z₃.

    Raises:
        SingularMatrixError: If Z₁ or R + BᵀPB is numerically singular.
    """
    t = _terms(prob, sol)
    z1 = _assemble_z1(prob, t)
    rhs = np.hstack([_assemble_z2(prob, t), _assemble_z3(prob, sol, t)])
    solved = solve_linear(z1, rhs)
    n2 = prob.n * prob.n
    return DareSensitivity(dp_da=solved[:, :n2], dp_db=solved[:, n2:])


def dare_jacobians_printed_z3(prob: DareProblem, sol: DareSolution) -> DareSensitivity:
    """Jacobians using the Z₃ bracket as printed (gain term only).

    Kept for comparison in the gradient-check report; the completed form in
    :func:`dare_jacobians` is the one that matches finite differences.
    """
    t = _terms(prob, sol)
    z1 = _assemble_z1(prob, t)
    z3 = t.at_kron_at @ _z3_gain_term(prob, sol, t)
    return DareSensitivity(
        dp_da=solve_linear(z1, _assemble_z2(prob, t)),
        dp_db=solve_linear(z1, z3),
    )


def dare_jacobians_fd(prob: DareProblem, step: float = FD_STEP) -> DareSensitivity:
    """Central finite-difference estimate of the DARE Jacobians.

    Each entry is perturbed by ``step * (1 + |entry|)``; perturbed problems
    are warm-started from the unperturbed solution.

    Raises:
        NotStabilizableError: Propagated from any perturbed solve.
    """
    base = solve_dare(prob)
    n, m = prob.n, prob.m

    def central(
        a_plus: FloatArray, a_minus: FloatArray, b_plus: FloatArray, b_minus: FloatArray, h: float
    ) -> FloatArray:
        p_plus = solve_dare(prob.with_dynamics(a_plus, b_plus), initial=base.p).p
        p_minus = solve_dare(prob.with_dynamics(a_minus, b_minus), initial=base.p).p
        return (vec(p_plus) - vec(p_minus)).ravel() / (2.0 * h)

    dp_da = np.zeros((n * n, n * n))
    for j in range(n * n):
        i, c = j % n, j // n
        h = step * (1.0 + abs(prob.a[i, c]))
        plus, minus = prob.a.copy(), prob.a.copy()
        plus[i, c] += h
        minus[i, c] -= h
        dp_da[:, j] = central(plus, minus, prob.b, prob.b, h)

    dp_db = np.zeros((n * n, n * m))
    for j in range(n * m):
        i, c = j % n, j // n
        h = step * (1.0 + abs(prob.b[i, c]))
        plus, minus = prob.b.copy(), prob.b.copy()
        plus[i, c] += h
        minus[i, c] -= h
        dp_db[:, j] = central(prob.a, prob.a, plus, minus, h)

    logger.debug("finite-difference DARE Jacobians computed for n=%d m=%d", n, m)
    return DareSensitivity(dp_da=dp_da, dp_db=dp_db)
