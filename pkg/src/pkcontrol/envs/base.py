"""Environment interface, RK4 integration and the task registry.

Environments are fully observed: the observation is the simulator state. The
ground-truth physics is a :class:`PartialModel` built with the true parameter
values and integrated with classical RK4, while controllers work on an Euler
discretization of a possibly wrong model.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from typing import Any, ClassVar

import gymnasium as gym
import numpy as np
from gymnasium import spaces

from pkcontrol.core.dynamics import PartialModel, eval_f, make_model
from pkcontrol.core.errors import InvalidParameterError
from pkcontrol.core.models import EnvSpec, FloatArray, ReferencePoint, StepResult, TimeKind


def rk4_step(model: PartialModel, x: FloatArray, u: FloatArray, dt: float) -> FloatArray:
    """One classical Runge-Kutta step with the control held constant."""
    k1 = eval_f(model, x, u)
    k2 = eval_f(model, x + 0.5 * dt * k1, u)
    k3 = eval_f(model, x + 0.5 * dt * k2, u)
    k4 = eval_f(model, x + dt * k3, u)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(
    model: PartialModel, x: FloatArray, u: FloatArray, dt: float, substeps: int = 1
) -> FloatArray:
    """Advance the state by ``dt``.

    Continuous models take ``substeps`` RK4 steps of ``dt / substeps``;
    discrete models apply the map once.
    """
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if model.time_kind is TimeKind.DISCRETE:
        return eval_f(model, x, u)
    h = dt / substeps
    for _ in range(substeps):
        x = rk4_step(model, x, u, h)
    return x


def wrap_angle(theta: FloatArray | float) -> FloatArray | float:
    """Map angles to [-pi, pi)."""
    return (np.asarray(theta) + np.pi) % (2.0 * np.pi) - np.pi


def state_error(obs: FloatArray, x_d: FloatArray, angle_indices: Sequence[int]) -> FloatArray:
    """``obs - x_d`` with angular coordinates wrapped."""
    err = np.asarray(obs, dtype=np.float64) - np.asarray(x_d, dtype=np.float64)
    if angle_indices:
        idx = list(angle_indices)
        err[..., idx] = wrap_angle(err[..., idx])
    return err


class Environment(gym.Env[FloatArray, FloatArray], ABC):
    """Single-owner simulation environment following the gymnasium API.

    Subclasses define the task constants as class variables and implement
    the reward, termination and reset distribution. ``reset`` accepts a
    ``preset`` option naming an initial state.
    """

    name: ClassVar[str]
    model_name: ClassVar[str]
    angle_indices: ClassVar[tuple[int, ...]] = ()
    refresh_every_step: ClassVar[bool] = False
    dt: ClassVar[float]
    substeps: ClassVar[int] = 1
    max_steps: ClassVar[int]
    action_low: ClassVar[tuple[float, ...]]
    action_high: ClassVar[tuple[float, ...]]
    default_q: ClassVar[tuple[float, ...]]
    default_r: ClassVar[tuple[float, ...]]
    default_psi_init: ClassVar[tuple[float, ...]]
    presets: ClassVar[Mapping[str, tuple[float, ...]]] = {}

    def __init__(
        self,
        physics: Mapping[str, float] | None = None,
        constants: Mapping[str, float] | None = None,
        preset: str | None = None,
        max_steps: int | None = None,
    ) -> None:
        """Initialize the environment.

        Args:
            physics: Overrides for the true physical parameters.
            constants: Overrides for the known constants of the true model.
            preset: Named initial state used by every reset.
            max_steps: Horizon override.

        Raises:
            InvalidParameterError: For unknown presets or invalid physics.
        """
        if preset is not None and preset not in self.presets:
            raise InvalidParameterError(
                f"unknown preset '{preset}' for {self.name}; choose from {sorted(self.presets)}"
            )
        self.true_model = make_model(self.model_name, physics, constants)
        self.preset = preset
        self._max_steps = max_steps if max_steps is not None else self.max_steps
        if self._max_steps < 1:
            raise InvalidParameterError(f"max_steps must be positive, got {self._max_steps}")
        self.observation_space = spaces.Box(
            -np.inf, np.inf, shape=(self.true_model.state_dim,), dtype=np.float64
        )
        self.action_space = spaces.Box(
            np.array(self.action_low), np.array(self.action_high), dtype=np.float64
        )
        self._task_spec = EnvSpec(
            self.observation_space, self.action_space, dt=self.dt, max_steps=self._max_steps
        )
        self._state = np.zeros(self._task_spec.obs_dim)
        self._steps = 0

    @property
    def task_spec(self) -> EnvSpec:
        return self._task_spec

    @property
    def state(self) -> FloatArray:
        return self._state.copy()

    @property
    def steps(self) -> int:
        return self._steps

    def reset(
        self, *, seed: int | None = None, options: dict[str, Any] | None = None
    ) -> tuple[FloatArray, dict[str, Any]]:
        """Start a new episode and return the first observation and info."""
        super().reset(seed=seed)
        name = (options or {}).get("preset", self.preset)
        if name is not None:
            if name not in self.presets:
                raise InvalidParameterError(f"unknown preset '{name}' for {self.name}")
            self._state = self._preset_state(name)
        else:
            self._state = self._sample_initial_state(self.np_random)
        self._steps = 0
        self._on_reset()
        return self.state, self._info()

    def set_state(self, state: FloatArray) -> None:
        """Overwrite the simulator state; used by tests and scripted rollouts."""
        state = np.asarray(state, dtype=np.float64)
        if state.shape != (self._task_spec.obs_dim,):
            raise InvalidParameterError(f"state must have shape ({self._task_spec.obs_dim},)")
        self._state = state.copy()

    def step(self, action: FloatArray) -> StepResult:
        """Clamp the action, integrate one control interval and score it."""
        action = self._task_spec.clamp(np.asarray(action, dtype=np.float64).reshape(-1))
        control = self._actuate(action)
        self._state = integrate(self.true_model, self._state, control, self.dt, self.substeps)
        self._steps += 1
        reward = self.reward(self._state, action)
        terminated = self._terminated(self._state)
        truncated = (not terminated) and self._steps >= self._max_steps
        return StepResult(self.state, float(reward), terminated, truncated, self._info())

    def reference_at(self, obs: FloatArray) -> ReferencePoint:
        """Setpoint for the controller; regulation tasks hold the equilibrium."""
        spec = self._task_spec
        return ReferencePoint(x_d=np.zeros(spec.obs_dim), u_d=np.zeros(spec.act_dim))

    def state_error(self, obs: FloatArray, ref: ReferencePoint) -> FloatArray:
        return state_error(obs, ref.x_d, self.angle_indices)

    def reward(self, state: FloatArray, action: FloatArray) -> float:
        """Reward for arriving in ``state`` after applying ``action``."""
        return float(self._reward(np.asarray(state, dtype=np.float64), action))

    def _actuate(self, action: FloatArray) -> FloatArray:
        return action

    def _on_reset(self) -> None:
        """Hook for subclasses that carry per-episode state."""

    def _info(self) -> dict[str, Any]:
        return {}

    def _preset_state(self, name: str) -> FloatArray:
        return np.array(self.presets[name], dtype=np.float64)

    @abstractmethod
    def _sample_initial_state(self, rng: np.random.Generator) -> FloatArray: ...

    @abstractmethod
    def _reward(self, state: FloatArray, action: FloatArray) -> float: ...

    @abstractmethod
    def _terminated(self, state: FloatArray) -> bool: ...


def start_episode(
    env: Environment, rng: np.random.Generator, preset: str | None = None
) -> FloatArray:
    """Reset ``env`` with draws taken from ``rng`` and return the first observation."""
    env.np_random = rng
    obs, _ = env.reset(options=None if preset is None else {"preset": preset})
    return obs


ENVIRONMENTS: dict[str, type[Environment]] = {}


def register(cls: type[Environment]) -> type[Environment]:
    """Class decorator adding an environment to the registry."""
    ENVIRONMENTS[cls.name] = cls
    return cls


def make_env(
    name: str,
    physics: Mapping[str, float] | None = None,
    constants: Mapping[str, float] | None = None,
    preset: str | None = None,
    max_steps: int | None = None,
    **options: object,
) -> Environment:
    """Instantiate a registered environment by task name.

    Raises:
        InvalidParameterError: If the task name is unknown.
    """
    cls = ENVIRONMENTS.get(name)
    if cls is None:
        raise InvalidParameterError(f"unknown task '{name}'; choose from {sorted(ENVIRONMENTS)}")
    return cls(  # type: ignore[call-arg]
        physics=physics, constants=constants, preset=preset, max_steps=max_steps, **options
    )
