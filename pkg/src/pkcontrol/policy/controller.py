"""Differentiable LQR head driven by a partially known model.

For the current ψ and reference, a refresh linearizes the model, discretizes
it, solves the DARE and assembles the gain derivatives

    dK/dψⱼ = M₂ [(dBᵀPA + Bᵀ dP A + BᵀP dA) − (dBᵀPB + Bᵀ dP B + BᵀP dB) K]

with vec dP = (∂vecP/∂vecA) vec dA + (∂vecP/∂vecB) vec dB. The LQR action is
``û = −K (x − x_d) + u_d``.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from pkcontrol.core.dynamics import LinearizedSystem, PartialModel, linearize
from pkcontrol.core.errors import InvalidParameterError, NotStabilizableError, SingularMatrixError
from pkcontrol.core.models import FloatArray, Setpoint
from pkcontrol.core.riccati import (
    DareProblem,
    DareSensitivity,
    DareSolution,
    dare_jacobians,
    solve_dare,
)
from pkcontrol.core.tensor_ops import solve_linear, unvec, vec
from pkcontrol.utils.logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class LqrCache:
    """Everything derived from one (ψ, setpoint) pair."""

    psi: FloatArray
    setpoint: Setpoint
    linearized: LinearizedSystem
    solution: DareSolution
    sensitivity: DareSensitivity
    dk_dpsi: tuple[FloatArray, ...]

    @property
    def k(self) -> FloatArray:
        return self.solution.k


def gain_derivatives(
    lin: LinearizedSystem, r: FloatArray, sol: DareSolution, sens: DareSensitivity
) -> tuple[FloatArray, ...]:
    """dK/dψⱼ for every ψ entry, one m x n matrix each."""
    a, b, p, k = lin.a_dis, lin.b_dis, sol.p, sol.k
    n, m = b.shape
    m2 = solve_linear(r + b.T @ p @ b, np.eye(m))
    pa, pb = p @ a, p @ b
    out = []
    for j in range(len(lin.da_dpsi)):
        da = lin.da_dis_dpsi(j)
        db = lin.db_dis_dpsi(j)
        dp = unvec(sens.dp_da @ vec(da) + sens.dp_db @ vec(db), n, n)
        lhs = db.T @ pa + b.T @ dp @ a + pb.T @ da
        rhs = db.T @ pb + b.T @ dp @ b + pb.T @ db
        out.append(m2 @ (lhs - rhs @ k))
    return tuple(out)


class LqrHead:
    """Owns ψ and the refreshed LQR quantities for one policy.

    Refreshes are memoized by exact (ψ, setpoint) bytes, so repeated refreshes
    at an unchanged point are free and return the identical cache.
    """

    def __init__(
        self,
        model: PartialModel,
        q: FloatArray,
        r: FloatArray,
        tau: float,
        memo_size: int = 64,
        pullback: float = 0.5,
    ) -> None:
        self.model = model
        self.problem_weights = DareProblem(
            np.zeros((model.state_dim, model.state_dim)),
            np.zeros((model.state_dim, model.control_dim)),
            q,
            r,
        )
        self.tau = float(tau)
        if self.tau <= 0:
            raise InvalidParameterError(f"tau must be positive, got {tau}")
        self.memo_size = memo_size
        self.pullback = pullback
        self.stability_events = 0
        self._known_constants = dict(model.known_constants)
        self._memo: OrderedDict[bytes, LqrCache] = OrderedDict()
        self._last_valid: LqrCache | None = None
        self._warm_start: FloatArray | None = None

    @property
    def q(self) -> FloatArray:
        return self.problem_weights.q

    @property
    def r(self) -> FloatArray:
        return self.problem_weights.r

    @property
    def psi(self) -> FloatArray:
        return self.model.psi.values.copy()

    @property
    def psi_names(self) -> tuple[str, ...]:
        return self.model.psi.names

    @property
    def num_psi(self) -> int:
        return len(self.model.psi)

    def set_psi(self, values: FloatArray) -> None:
        self.model = self.model.with_psi(values)

    def check_known_constants(self) -> None:
        """Raise if the embedded model's known constants have changed."""
        if dict(self.model.known_constants) != self._known_constants:
            raise InvalidParameterError("known model constants were modified")

    def _compute(self, setpoint: Setpoint) -> LqrCache:
        lin = linearize(self.model, setpoint, self.tau)
        prob = self.problem_weights.with_dynamics(lin.a_dis, lin.b_dis)
        sol = None
        if self._warm_start is not None and self._warm_start.shape == prob.q.shape:
            try:
                sol = solve_dare(prob, initial=self._warm_start)
            except NotStabilizableError:
                sol = None
        if sol is None:
            sol = solve_dare(prob)
        sens = dare_jacobians(prob, sol)
        self._warm_start = sol.p
        return LqrCache(
            psi=self.psi,
            setpoint=setpoint,
            linearized=lin,
            solution=sol,
            sensitivity=sens,
            dk_dpsi=gain_derivatives(lin, prob.r, sol, sens),
        )

    def refresh(self, setpoint: Setpoint) -> tuple[LqrCache, bool]:
        """Cache for the current ψ at ``setpoint``.

        Returns:
            The cache and a flag that is True when the solve failed and the
            last valid cache was reused. On such a stability event ψ is pulled
            back towards the last valid ψ by the ``pullback`` fraction.

        Raises:
            NotStabilizableError: If the solve fails before any valid cache
                exists.
        """
        key = self.model.psi.values.tobytes() + b"#" + setpoint.key()
        cached = self._memo.get(key)
        if cached is not None:
            self._memo.move_to_end(key)
            self._last_valid = cached
            return cached, False

        try:
            cache = self._compute(setpoint)
        except (NotStabilizableError, SingularMatrixError, InvalidParameterError) as e:
            if self._last_valid is None:
                raise NotStabilizableError(f"no stabilizing LQR head at the initial ψ: {e}") from e
            self.stability_events += 1
            valid_psi = self._last_valid.psi
            self.set_psi(self.psi - self.pullback * (self.psi - valid_psi))
            logger.warning(
                "Riccati solve failed, reusing last valid gain",
                extra={"psi": self.psi.tolist(), "stability_events": self.stability_events},
            )
            return self._last_valid, True

        self._memo[key] = cache
        if len(self._memo) > self.memo_size:
            self._memo.popitem(last=False)
        self._last_valid = cache
        return cache, False

    def control(self, cache: LqrCache, error: FloatArray, u_d: FloatArray) -> FloatArray:
        """û = −K e + u_d for a state error ``e`` (vector or batch of rows)."""
        return u_d - error @ cache.k.T

    def control_psi_jacobian(self, cache: LqrCache, error: FloatArray) -> FloatArray:
        """dû/dψ, shape (m, |ψ|) for one error vector."""
        if not cache.dk_dpsi:
            return np.zeros((cache.k.shape[0], 0))
        return np.stack([-(dk @ error) for dk in cache.dk_dpsi], axis=1)
