"""Deterministic policy evaluation and the per-run training log."""

from __future__ import annotations

import csv
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from pkcontrol.core.errors import InvalidParameterError
from pkcontrol.core.models import FloatArray, ReferencePoint
from pkcontrol.envs.base import Environment, start_episode
from pkcontrol.policy.policies import Policy
from pkcontrol.utils.seeding import RandomStreams

ActionFn = Callable[[FloatArray, ReferencePoint], FloatArray]


@dataclass
class Trajectory:
    """One episode: states include the initial one, references are per step."""

    states: list[FloatArray] = field(default_factory=list)
    actions: list[FloatArray] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    references: list[FloatArray] = field(default_factory=list)
    terminated: bool = False

    @property
    def total_reward(self) -> float:
        return float(np.sum(self.rewards))

    def __len__(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class EvaluationResult:
    returns: tuple[float, ...]
    trajectories: tuple[Trajectory, ...]

    @property
    def mean_return(self) -> float:
        return float(np.mean(self.returns))

    @property
    def std_return(self) -> float:
        return float(np.std(self.returns))


def rollout(
    env: Environment,
    act: ActionFn,
    rng: np.random.Generator,
    preset: str | None = None,
) -> Trajectory:
    """Run one episode with a deterministic action function.

    The reference is read at reset and, for tasks with a moving reference,
    again at every step.
    """
    obs = start_episode(env, rng, preset)
    ref = env.reference_at(obs)
    traj = Trajectory(states=[obs])
    while True:
        if env.refresh_every_step and traj.actions:
            ref = env.reference_at(obs)
        action = env.task_spec.clamp(act(obs, ref))
        result = env.step(action)
        traj.actions.append(action)
        traj.rewards.append(result.reward)
        traj.references.append(ref.x_d.copy())
        traj.states.append(result.next_obs)
        obs = result.next_obs
        if result.done:
            traj.terminated = result.terminated
            return traj


def evaluate_policy(
    env: Environment,
    policy: Policy,
    episodes: int,
    seed: int,
    preset: str | None = None,
) -> EvaluationResult:
    """Mean-action rollouts; the same seed reproduces identical returns.

    Raises:
        InvalidParameterError: If ``episodes`` is not positive.
    """
    if episodes < 1:
        raise InvalidParameterError(f"episodes must be positive, got {episodes}")
    rng = RandomStreams(seed).eval
    trajectories = tuple(rollout(env, policy.mean_action, rng, preset) for _ in range(episodes))
    return EvaluationResult(
        returns=tuple(t.total_reward for t in trajectories), trajectories=trajectories
    )


def assert_known_constants(policy: Policy) -> None:
    """Raise if a training step touched the embedded model's known constants."""
    if policy.head is not None:
        policy.head.check_known_constants()


@dataclass(frozen=True)
class LogRow:
    env_steps: int
    episodes: int
    mean_eval_return: float
    std_eval_return: float
    actor_loss: float
    critic_loss: float
    psi: tuple[float, ...]
    stability_events: int


def log_columns(num_psi: int) -> list[str]:
    return [
        "env_steps",
        "episodes",
        "mean_eval_return",
        "std_eval_return",
        "actor_loss",
        "critic_loss",
        *(f"psi_{i}" for i in range(num_psi)),
        "stability_events",
    ]


def _fmt(value: float) -> str:
    return repr(float(value))


class TrainingLog:
    """Append-only CSV log, flushed after every row."""

    def __init__(self, path: Path, num_psi: int) -> None:
        self.path = path
        self.num_psi = num_psi
        self.rows: list[LogRow] = []
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as f:
            csv.writer(f).writerow(log_columns(num_psi))

    def append(self, row: LogRow) -> None:
        if len(row.psi) != self.num_psi:
            raise InvalidParameterError(f"expected {self.num_psi} ψ values, got {len(row.psi)}")
        self.rows.append(row)
        with self.path.open("a", encoding="utf-8", newline="") as f:
            csv.writer(f).writerow(
                [
                    row.env_steps,
                    row.episodes,
                    _fmt(row.mean_eval_return),
                    _fmt(row.std_eval_return),
                    _fmt(row.actor_loss),
                    _fmt(row.critic_loss),
                    *(_fmt(p) for p in row.psi),
                    row.stability_events,
                ]
            )


def read_training_log(path: Path) -> list[dict[str, float]]:
    """Rows of a training log as floats keyed by column name.

    Raises:
        InvalidParameterError: If the file is missing or lacks the base columns.
    """
    if not path.exists():
        raise InvalidParameterError(f"training log not found: {path}")
    with path.open("r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        header: Sequence[str] = reader.fieldnames or ()
        if "env_steps" not in header or "mean_eval_return" not in header:
            raise InvalidParameterError(f"{path} is not a training log")
        return [{k: float(v) for k, v in row.items()} for row in reader]
