from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Any, NamedTuple

import numpy as np
from gymnasium import spaces
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]


class ExitCode(IntEnum):
    SUCCESS = 0
    VALIDATION_ERROR = 1
    GRADCHECK_FAILURE = 2
    DIVERGENCE = 3


class TimeKind(Enum):
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"


class ActionMode(Enum):
    DETERMINISTIC = "deterministic"
    STOCHASTIC = "stochastic"


class ReferenceMode(Enum):
    NEAREST = "nearest"
    TIMED = "timed"


class Algorithm(Enum):
    PG = "pg"
    PK_PG = "pk-pg"
    TD3 = "td3"
    PK_TD3 = "pk-td3"
    LQR = "lqr"

    @property
    def uses_model(self) -> bool:
        """Whether the policy embeds the differentiable LQR head."""
        return self in (Algorithm.PK_PG, Algorithm.PK_TD3, Algorithm.LQR)

    @property
    def is_on_policy(self) -> bool:
        return self in (Algorithm.PG, Algorithm.PK_PG)


class RunStatus(Enum):
    QUEUED = "queued"
    RUNNING = "running"
    COMPLETED = "completed"
    DIVERGED = "diverged"
    FAILED = "failed"
    CANCELLED = "cancelled"


@dataclass(frozen=True, eq=False)
class Setpoint:
    x_d: FloatArray
    u_d: FloatArray

    def key(self) -> bytes:
        """Byte key identifying this setpoint exactly (for memoization)."""
        return self.x_d.tobytes() + b"|" + self.u_d.tobytes()


@dataclass(frozen=True, eq=False)
class ReferencePoint(Setpoint):
    progress: float = 0.0


@dataclass(frozen=True, eq=False)
class EnvSpec:
    """Observation and action boxes of a task plus its timing."""

    observation_space: spaces.Box
    action_space: spaces.Box
    dt: float
    max_steps: int

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if len(self.observation_space.shape) != 1 or len(self.action_space.shape) != 1:
            raise ValueError("observation and action spaces must be one-dimensional boxes")
        if not self.action_space.is_bounded():
            raise ValueError("the action box must be bounded")
        if not np.all(self.action_space.low < self.action_space.high):
            raise ValueError("act_low must be strictly below act_high")

    @classmethod
    def from_bounds(
        cls,
        obs_dim: int,
        act_low: Sequence[float] | FloatArray,
        act_high: Sequence[float] | FloatArray,
        dt: float,
        max_steps: int,
    ) -> EnvSpec:
        return cls(
            spaces.Box(-np.inf, np.inf, shape=(obs_dim,), dtype=np.float64),
            spaces.Box(np.array(act_low), np.array(act_high), dtype=np.float64),
            dt=dt,
            max_steps=max_steps,
        )

    @property
    def obs_dim(self) -> int:
        return int(self.observation_space.shape[0])

    @property
    def act_dim(self) -> int:
        return int(self.action_space.shape[0])

    @property
    def act_low(self) -> FloatArray:
        return self.action_space.low

    @property
    def act_high(self) -> FloatArray:
        return self.action_space.high

    @property
    def act_scale(self) -> FloatArray:
        """Half-width of the action box."""
        return (self.act_high - self.act_low) / 2.0

    def clamp(self, action: FloatArray) -> FloatArray:
        return np.clip(action, self.action_space.low, self.action_space.high)


class StepResult(NamedTuple):
    """The gymnasium step tuple with named fields."""

    next_obs: FloatArray
    reward: float
    terminated: bool
    truncated: bool
    info: dict[str, Any]

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


@dataclass(frozen=True, eq=False)
class Transition:
    obs: FloatArray
    action: FloatArray
    reward: float
    next_obs: FloatArray
    terminated: bool
    ref: Setpoint
    next_ref: Setpoint


@dataclass
class TrainingProgress:
    env_steps: int = 0
    current_steps_per_second: float = 0.0
    average_steps_per_second: float = 0.0
    eta_seconds: int = 0
    elapsed_seconds: int = 0

    @property
    def eta_formatted(self) -> str:
        if self.eta_seconds <= 0:
            return "0s"
        hours, remainder = divmod(self.eta_seconds, 3600)
        minutes, seconds = divmod(remainder, 60)
        if hours > 0:
            return f"{hours}h {minutes}m"
        elif minutes > 0:
            return f"{minutes}m {seconds}s"
        return f"{seconds}s"
