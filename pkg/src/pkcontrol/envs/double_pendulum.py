"""Inverted double pendulum on a cart with a quadratic tip/velocity penalty."""

from __future__ import annotations

from typing import ClassVar

import numpy as np

from pkcontrol.core.dynamics import idp_mechanical_energy
from pkcontrol.core.errors import InvalidParameterError
from pkcontrol.core.models import FloatArray
from pkcontrol.envs.base import Environment, register

TIP_HEIGHT_TARGET = 1.2
TIP_HEIGHT_LIMIT = 1.0
DEFAULT_POSITION_NOISE = 0.1
DEFAULT_VELOCITY_RANGE = 0.2


@register
class DoublePendulumEnv(Environment):
    """State (x, ẋ, θ₁, θ̇₁, θ₂, θ̇₂) with absolute link angles from vertical.

    Reward is ``-(x_tip² + 2 (y_tip - 1.2)² + 10 θ̇₁² + 20 θ̇₂²)`` with no alive
    bonus; the episode terminates once the tip drops to 1.0 m.
    """

    name = "idp"
    model_name = "idp"
    angle_indices = (2, 4)
    dt = 0.05
    substeps = 5
    max_steps = 1000
    action_low = (-1.0,)
    action_high = (1.0,)
    default_q = (1.0, 0.1, 5.0, 10.0, 5.0, 20.0)
    default_r = (0.01,)
    default_psi_init = (8.0, 3.5, 3.5, 0.55, 0.55)
    # Initial (ẋ, θ̇₁, θ̇₂) of the hard-start cases; positions upright
    hard_start_velocities: ClassVar[dict[str, tuple[float, float, float]]] = {
        "hard-1": (-0.13, -0.13, 0.17),
        "hard-2": (-0.11, -0.13, 0.17),
        "hard-3": (-0.13, -0.13, 0.18),
    }
    presets: ClassVar[dict[str, tuple[float, ...]]] = {
        "upright": (0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        **{
            key: (0.0, v[0], 0.0, v[1], 0.0, v[2])
            for key, v in hard_start_velocities.items()
        },
    }

    def __init__(
        self,
        *args: object,
        reset_position_noise: float | None = None,
        reset_velocity_range: float | None = None,
        **kwargs: object,
    ) -> None:
        super().__init__(*args, **kwargs)  # type: ignore[arg-type]
        self.position_noise = (
            DEFAULT_POSITION_NOISE if reset_position_noise is None else reset_position_noise
        )
        self.velocity_range = (
            DEFAULT_VELOCITY_RANGE if reset_velocity_range is None else reset_velocity_range
        )
        if self.position_noise < 0 or self.velocity_range < 0:
            raise InvalidParameterError("reset ranges must be nonnegative")

    def tip_position(self, state: FloatArray) -> tuple[float, float]:
        psi = self.true_model.psi.as_dict()
        l1, l2 = psi["L1"], psi["L2"]
        x_tip = state[0] + l1 * np.sin(state[2]) + l2 * np.sin(state[4])
        y_tip = l1 * np.cos(state[2]) + l2 * np.cos(state[4])
        return float(x_tip), float(y_tip)

    def mechanical_energy(self, state: FloatArray | None = None) -> float:
        """Total energy of the true system in ``state`` (defaults to the current one)."""
        return idp_mechanical_energy(self.true_model, self._state if state is None else state)

    def _sample_initial_state(self, rng: np.random.Generator) -> FloatArray:
        state = np.zeros(6)
        state[[0, 2, 4]] = rng.uniform(-self.position_noise, self.position_noise, size=3)
        state[[1, 3, 5]] = rng.uniform(-self.velocity_range, self.velocity_range, size=3)
        return state

    def _reward(self, state: FloatArray, action: FloatArray) -> float:
        x_tip, y_tip = self.tip_position(state)
        distance = x_tip**2 + 2.0 * (y_tip - TIP_HEIGHT_TARGET) ** 2
        velocity = 10.0 * state[3] ** 2 + 20.0 * state[5] ** 2
        return -float(distance + velocity)

    def _terminated(self, state: FloatArray) -> bool:
        return self.tip_position(state)[1] <= TIP_HEIGHT_LIMIT
