"""Shared training-loop plumbing: evaluation schedule, guards and progress."""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from pkcontrol.core.errors import DivergenceDetectedError
from pkcontrol.core.models import TrainingProgress
from pkcontrol.core.progress import ThroughputTracker
from pkcontrol.envs.base import Environment, make_env
from pkcontrol.policy.policies import Policy
from pkcontrol.rl.evaluation import LogRow, TrainingLog, assert_known_constants, evaluate_policy
from pkcontrol.rl.optim import make_optimizer
from pkcontrol.utils.config import ExperimentConfig
from pkcontrol.utils.history import EvalPoint
from pkcontrol.utils.logging import get_logger
from pkcontrol.utils.seeding import RandomStreams

logger = get_logger(__name__)

ProgressCallback = Callable[[TrainingProgress], None]
StopCheck = Callable[[], bool]


def make_task_env(config: ExperimentConfig, preset: str | None = None) -> Environment:
    """Environment for ``config.task`` with the configured options applied."""
    env_cfg = config.env
    options: dict[str, object] = {}
    if config.task == "tracking":
        options["actuator_noise"] = env_cfg.actuator_noise
        options["reward_weights"] = env_cfg.reward_weights
        options["reference_mode"] = env_cfg.reference_mode
    elif config.task == "idp":
        options["reset_position_noise"] = env_cfg.reset_position_noise
        options["reset_velocity_range"] = env_cfg.reset_velocity_range
    return make_env(
        config.task,
        physics=env_cfg.physics or None,
        constants=env_cfg.constants or None,
        preset=preset if preset is not None else env_cfg.preset,
        max_steps=env_cfg.max_steps,
        **options,
    )


@dataclass
class TrainingResult:
    eval_points: list[EvalPoint] = field(default_factory=list)
    env_steps: int = 0
    episodes: int = 0
    cancelled: bool = False


class Trainer(ABC):
    """Owns one environment, one policy and the run's random streams.

    Subclasses implement :meth:`_run`, call :meth:`_record_steps` as
    environment steps accumulate and :meth:`_check_divergence` after every
    update. Evaluation points fall every ``eval_interval`` steps and at
    step 0.
    """

    def __init__(
        self,
        env: Environment,
        policy: Policy,
        config: ExperimentConfig,
        seed: int,
        log: TrainingLog | None = None,
        on_progress: ProgressCallback | None = None,
        should_stop: StopCheck | None = None,
    ) -> None:
        self.env = env
        self.eval_env = make_task_env(config)
        self.policy = policy
        self.config = config
        self.rl = config.rl
        self.seed = seed
        self.streams = RandomStreams(seed)
        self.log = log
        self.on_progress = on_progress
        self.should_stop = should_stop or (lambda: False)
        self.env_steps = 0
        self.episodes = 0
        self.actor_loss = 0.0
        self.critic_loss = 0.0
        self.result = TrainingResult()
        self.tracker = ThroughputTracker()
        self._next_eval = 0
        self.net_optimizer = make_optimizer(
            self.rl.optimizer, policy.network.num_params, self.rl.lr_mlp, self.rl.max_grad_norm
        )
        self.psi_optimizer = make_optimizer(
            self.rl.optimizer, policy.num_psi, self.rl.lr_psi, self.rl.max_grad_norm
        )

    def train(self) -> TrainingResult:
        """Train until the step budget is used or a stop is requested.

        Raises:
            DivergenceDetectedError: If ψ or a loss leaves the guard band.
        """
        self.tracker.start(self.config.total_env_steps)
        logger.info(
            "Training %s on %s",
            self.config.algorithm.value,
            self.config.task,
            extra={"seed": self.seed, "env_steps": self.config.total_env_steps},
        )
        self._maybe_evaluate()
        self._run()
        self.result.env_steps = self.env_steps
        self.result.episodes = self.episodes
        return self.result

    def evaluate_only(self) -> TrainingResult:
        """Record the step-0 evaluation point without training."""
        self.tracker.start(0)
        self._maybe_evaluate()
        return self.result

    @property
    def budget_left(self) -> bool:
        return self.env_steps < self.config.total_env_steps

    def _stop_requested(self) -> bool:
        if self.should_stop():
            self.result.cancelled = True
            logger.info(
                "Training cancelled", extra={"seed": self.seed, "env_steps": self.env_steps}
            )
            return True
        return False

    @abstractmethod
    def _run(self) -> None: ...

    def apply_gradients(self, g_net: np.ndarray, g_psi: np.ndarray) -> None:
        """Descend the loss gradient for the network and ψ groups."""
        self.policy.network.assign(self.net_optimizer.step(self.policy.network.flatten(), g_net))
        if self.policy.num_psi:
            self.policy.set_psi(self.psi_optimizer.step(self.policy.psi, g_psi))
        assert_known_constants(self.policy)

    def _check_divergence(self, *losses: float) -> None:
        psi = self.policy.psi
        mean_abs_psi = float(np.mean(np.abs(psi))) if psi.size else 0.0
        guard = self.rl.divergence_guard
        bad = (
            not np.all(np.isfinite(psi))
            or mean_abs_psi > guard
            or any(not np.isfinite(v) or abs(v) > guard for v in losses)
        )
        if bad:
            logger.error(
                "Divergence detected",
                extra={"seed": self.seed, "env_steps": self.env_steps, "psi": psi.tolist()},
            )
            raise DivergenceDetectedError(
                f"seed {self.seed} diverged at {self.env_steps} env steps "
                f"(mean |psi| {mean_abs_psi:.3g}, losses {[float(v) for v in losses]})"
            )

    def _record_steps(self, count: int = 1) -> None:
        self.env_steps += count
        self._maybe_evaluate()

    def _maybe_evaluate(self) -> None:
        if self.env_steps < self._next_eval:
            return
        while self._next_eval <= self.env_steps:
            self._next_eval += self.config.eval_interval
        evaluation = evaluate_policy(
            self.eval_env, self.policy, self.config.eval_episodes, self.seed
        )
        point = EvalPoint(
            env_steps=self.env_steps,
            mean_return=evaluation.mean_return,
            std_return=evaluation.std_return,
        )
        self.result.eval_points.append(point)
        if self.log is not None:
            self.log.append(
                LogRow(
                    env_steps=self.env_steps,
                    episodes=self.episodes,
                    mean_eval_return=point.mean_return,
                    std_eval_return=point.std_return,
                    actor_loss=self.actor_loss,
                    critic_loss=self.critic_loss,
                    psi=tuple(self.policy.psi.tolist()),
                    stability_events=self.policy.stability_events,
                )
            )
        progress = self.tracker.update(self.env_steps)
        logger.info(
            "Evaluation at %d steps: mean return %.3f (%.1f steps/s, ETA %s)",
            self.env_steps,
            point.mean_return,
            progress.average_steps_per_second,
            progress.eta_formatted,
            extra={"seed": self.seed, "env_steps": self.env_steps},
        )
        if self.on_progress is not None:
            self.on_progress(progress)
