"""Cart-pole balancing with a continuous force and the alive bonus."""

from __future__ import annotations

from typing import ClassVar

import numpy as np

from pkcontrol.core.models import FloatArray
from pkcontrol.envs.base import Environment, register

X_LIMIT = 2.4
THETA_LIMIT = 0.2095
RESET_RANGE = 0.05


@register
class CartPoleEnv(Environment):
    """State (x, ẋ, θ, θ̇); reward 1 for every step, including the last."""

    name = "cartpole"
    model_name = "cartpole"
    angle_indices = (2,)
    dt = 0.02
    max_steps = 500
    action_low = (-10.0,)
    action_high = (10.0,)
    default_q = (1.0, 1.0, 10.0, 1.0)
    default_r = (0.1,)
    # Far enough from (1.0, 0.1, 0.5) that the plain LQR prior fails early
    default_psi_init = (0.3, 0.03, 0.15)
    presets: ClassVar[dict[str, tuple[float, ...]]] = {
        "upright": (0.0, 0.0, 0.0, 0.0),
        "tilted": (0.0, 0.0, 0.1, 0.0),
    }

    def _sample_initial_state(self, rng: np.random.Generator) -> FloatArray:
        return rng.uniform(-RESET_RANGE, RESET_RANGE, size=4)

    def _reward(self, state: FloatArray, action: FloatArray) -> float:
        return 1.0

    def _terminated(self, state: FloatArray) -> bool:
        return bool(abs(state[0]) > X_LIMIT or abs(state[2]) > THETA_LIMIT)
