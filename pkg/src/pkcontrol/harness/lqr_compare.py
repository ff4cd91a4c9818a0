"""Pure LQR rollouts and the per-preset cost table."""

from __future__ import annotations

from collections import OrderedDict
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from pkcontrol.core.dynamics import PartialModel, linearize
from pkcontrol.core.errors import (
    InvalidParameterError,
    NotStabilizableError,
    SingularMatrixError,
)
from pkcontrol.core.models import FloatArray, ReferencePoint, Setpoint
from pkcontrol.core.riccati import DareProblem, DareSolution, solve_dare
from pkcontrol.envs.base import Environment, state_error
from pkcontrol.policy.policies import build_head
from pkcontrol.rl.evaluation import Trajectory, rollout
from pkcontrol.rl.trainer import make_task_env
from pkcontrol.utils.config import ExperimentConfig
from pkcontrol.utils.logging import get_logger
from pkcontrol.utils.seeding import RandomStreams

logger = get_logger(__name__)

PSI_SOURCES = ("true", "config")


class LqrController:
    """LQR on the Euler discretization of a model; no gradients.

    Gains are memoized per setpoint, so regulation tasks solve the DARE once.
    """

    def __init__(
        self,
        model: PartialModel,
        q: FloatArray,
        r: FloatArray,
        tau: float,
        angle_indices: Sequence[int] = (),
        memo_size: int = 256,
    ) -> None:
        self.model = model
        self.q = q
        self.r = r
        self.tau = tau
        self.angle_indices = tuple(angle_indices)
        self.memo_size = memo_size
        self._memo: OrderedDict[bytes, DareSolution] = OrderedDict()

    def solution(self, setpoint: Setpoint) -> DareSolution:
        """Riccati solution at ``setpoint``.

        Raises:
            NotStabilizableError: If the linearization cannot be stabilized.
        """
        key = setpoint.key()
        sol = self._memo.get(key)
        if sol is None:
            lin = linearize(self.model, setpoint, self.tau, with_param_jacobians=False)
            sol = solve_dare(DareProblem(lin.a_dis, lin.b_dis, self.q, self.r))
            self._memo[key] = sol
            if len(self._memo) > self.memo_size:
                self._memo.popitem(last=False)
        return sol

    def gain(self, setpoint: Setpoint) -> FloatArray:
        return self.solution(setpoint).k

    def __call__(self, obs: FloatArray, ref: ReferencePoint) -> FloatArray:
        err = state_error(obs, ref.x_d, self.angle_indices)
        return ref.u_d - self.gain(ref) @ err


def controller_for(env: Environment, config: ExperimentConfig, psi_source: str) -> LqrController:
    """LQR controller with the true or the configured initial ψ."""
    if psi_source not in PSI_SOURCES:
        raise InvalidParameterError(f"psi source must be one of {PSI_SOURCES}, got '{psi_source}'")
    head = build_head(env, config)
    model = head.model
    if psi_source == "true":
        model = model.with_psi(env.true_model.psi.values)
    return LqrController(model, head.q, head.r, head.tau, env.angle_indices)


@dataclass(frozen=True)
class LqrRow:
    preset: str
    psi_source: str
    total_reward: float | None
    steps: int
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def lqr_rollout(
    env: Environment, controller: LqrController, seed: int, preset: str | None = None
) -> Trajectory:
    return rollout(env, controller, RandomStreams(seed).eval, preset)


def lqr_table(
    config: ExperimentConfig,
    presets: Sequence[str] | None = None,
    psi_source: str = "true",
    seed: int = 0,
) -> list[LqrRow]:
    """Accumulated environment reward of pure LQR from each preset.

    A preset whose linearization cannot be stabilized yields a row with the
    error message instead of aborting the table.
    """
    env = make_task_env(config)
    names = list(presets) if presets else sorted(env.presets)
    rows: list[LqrRow] = []
    for name in names:
        if name not in env.presets:
            raise InvalidParameterError(f"unknown preset '{name}' for {config.task}")
        try:
            controller = controller_for(env, config, psi_source)
            traj = lqr_rollout(env, controller, seed, name)
        except (NotStabilizableError, SingularMatrixError) as e:
            logger.warning("LQR failed from preset %s: %s", name, e)
            rows.append(LqrRow(name, psi_source, None, 0, error=str(e)))
            continue
        rows.append(LqrRow(name, psi_source, traj.total_reward, len(traj)))
    return rows


def format_table(rows: Sequence[LqrRow], title: str = "LQR") -> str:
    """Plain-text table: one line per preset."""
    lines = [f"{'preset':<12} {'psi':<8} {'steps':>6} {title + ' return':>16}"]
    for row in rows:
        value = f"{row.total_reward:16.2f}" if row.total_reward is not None else f"{'n/a':>16}"
        lines.append(f"{row.preset:<12} {row.psi_source:<8} {row.steps:>6} {value}")
        if row.error:
            lines.append(f"  ! {row.error}")
    return "\n".join(lines)


def gain_matrix(config: ExperimentConfig, psi_source: str = "true") -> FloatArray:
    """Regulation gain at the origin; used to compare learned ψ with true LQR."""
    env = make_task_env(config)
    controller = controller_for(env, config, psi_source)
    return controller.gain(env.reference_at(np.zeros(env.task_spec.obs_dim)))
