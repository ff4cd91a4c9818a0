"""Execution of one seeded training run.

This module provides the RunEngine class that builds the environment and
policy for a configuration, trains them with the configured algorithm and
writes the run's artifacts under ``<output_dir>/seed_<s>/``.
"""

from __future__ import annotations

import time
from collections.abc import Callable
from pathlib import Path

from pkcontrol import __version__
from pkcontrol.core.errors import DivergenceDetectedError, NotStabilizableError
from pkcontrol.core.models import Algorithm, RunStatus, TrainingProgress
from pkcontrol.envs.base import Environment
from pkcontrol.policy.checkpoint import (
    load_checkpoint,
    make_checkpoint,
    restore_policy,
    save_checkpoint,
)
from pkcontrol.policy.policies import Policy, build_policy
from pkcontrol.rl.evaluation import TrainingLog
from pkcontrol.rl.pg import PGTrainer
from pkcontrol.rl.td3 import TD3Trainer
from pkcontrol.rl.trainer import Trainer, make_task_env
from pkcontrol.utils.config import ExperimentConfig, config_hash
from pkcontrol.utils.history import EvalPoint, RunRecord
from pkcontrol.utils.logging import get_logger
from pkcontrol.utils.seeding import RandomStreams

logger = get_logger(__name__)

LOG_FILE = "train_log.csv"
CHECKPOINT_FILE = "checkpoint.json"


def seed_dir(output_dir: Path, seed: int) -> Path:
    return output_dir / f"seed_{seed}"


def make_trainer(
    env: Environment,
    policy: Policy,
    config: ExperimentConfig,
    seed: int,
    log: TrainingLog | None = None,
    on_progress: Callable[[TrainingProgress], None] | None = None,
    should_stop: Callable[[], bool] | None = None,
) -> Trainer:
    """Trainer for ``config.algorithm``.

    Pure LQR runs get a deterministic-policy trainer that only evaluates.
    """
    if config.algorithm.is_on_policy:
        return PGTrainer(env, policy, config, seed, log, on_progress, should_stop)
    return TD3Trainer(env, policy, config, seed, log, on_progress, should_stop)


class RunEngine:
    """Runs one seed of an experiment.

    Example:
        >>> engine = RunEngine()
        >>> record = engine.run(config, seed=0)
        >>> record.status
        <RunStatus.COMPLETED: 'completed'>
    """

    def __init__(self) -> None:
        self._cancelled = False

    def cancel(self) -> None:
        """Request cancellation; the trainer stops at its next check."""
        self._cancelled = True

    def run(
        self,
        config: ExperimentConfig,
        seed: int,
        progress_callback: Callable[[TrainingProgress], None] | None = None,
    ) -> RunRecord:
        """Train one seed and write its log and final checkpoint.

        Returns:
            The run record. Divergence is captured as ``RunStatus.DIVERGED``
            with the error message rather than raised.

        Raises:
            PkControlError: For configuration or model errors that prevent
                the run from starting.
        """
        self._cancelled = False
        started = time.perf_counter()
        out = seed_dir(config.output_dir, seed)
        digest = config_hash(config)
        logger.info("Starting run", extra={"seed": seed, "config_hash": digest})

        streams = RandomStreams(seed)
        env = make_task_env(config)
        policy = build_policy(env, config, streams.policy_init)

        log = TrainingLog(out / LOG_FILE, policy.num_psi)
        trainer = make_trainer(
            env,
            policy,
            config,
            seed,
            log=log,
            on_progress=progress_callback,
            should_stop=lambda: self._cancelled,
        )

        status = RunStatus.COMPLETED
        message: str | None = None
        try:
            if config.algorithm is Algorithm.LQR:
                trainer.evaluate_only()
            else:
                trainer.train()
                if trainer.result.cancelled:
                    status = RunStatus.CANCELLED
        except (DivergenceDetectedError, NotStabilizableError) as e:
            status = RunStatus.DIVERGED
            message = str(e)
            logger.error("Run diverged: %s", e, extra={"seed": seed})

        checkpoint_path = save_checkpoint(
            out / CHECKPOINT_FILE, make_checkpoint(policy, config, trainer.env_steps)
        )
        record = self._record(
            config,
            seed,
            digest,
            status,
            started,
            message=message,
            eval_points=trainer.result.eval_points,
            checkpoint_path=checkpoint_path,
            log_path=log.path,
        )
        logger.info(
            "Run %s with final mean return %s",
            status.value,
            record.final_mean_return,
            extra={"seed": seed, "env_steps": trainer.env_steps},
        )
        return record

    @staticmethod
    def _record(
        config: ExperimentConfig,
        seed: int,
        digest: str,
        status: RunStatus,
        started: float,
        message: str | None = None,
        eval_points: list[EvalPoint] | None = None,
        checkpoint_path: Path | None = None,
        log_path: Path | None = None,
    ) -> RunRecord:
        return RunRecord(
            seed=seed,
            config_hash=digest,
            version=__version__,
            status=status,
            eval_points=list(eval_points or []),
            checkpoint_path=checkpoint_path.as_posix() if checkpoint_path else None,
            log_path=log_path.as_posix() if log_path else None,
            wall_clock_seconds=time.perf_counter() - started,
            message=message,
        )


def load_policy(
    checkpoint_path: Path, preset: str | None = None
) -> tuple[ExperimentConfig, Environment, Policy]:
    """Rebuild the environment and policy stored in a checkpoint.

    Raises:
        CheckpointError: If the checkpoint is unreadable or does not fit the
            policy its embedded config describes.
    """
    checkpoint = load_checkpoint(checkpoint_path)
    config = checkpoint.config
    env = make_task_env(config, preset)
    policy = build_policy(env, config, RandomStreams(0).policy_init)
    restore_policy(policy, checkpoint)
    return config, env, policy
