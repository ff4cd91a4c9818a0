"""Scalar linear-quadratic regulation task x⁺ = a x + b u."""

from __future__ import annotations

from typing import ClassVar

import numpy as np

from pkcontrol.core.models import FloatArray
from pkcontrol.envs.base import Environment, register


@register
class LinearEnv(Environment):
    """Discrete-time toy system with reward ``-(q x² + r u²)``.

    The reward weights equal the default LQR weights, so the LQR controller on
    the true (a, b) is the optimal policy for this task.
    """

    name = "linear"
    model_name = "linear"
    dt = 1.0
    max_steps = 200
    action_low = (-10.0,)
    action_high = (10.0,)
    default_q = (1.0,)
    default_r = (1.0,)
    default_psi_init = (0.9, 0.8)
    presets: ClassVar[dict[str, tuple[float, ...]]] = {"unit": (1.0,)}

    def _sample_initial_state(self, rng: np.random.Generator) -> FloatArray:
        return rng.uniform(-1.0, 1.0, size=1)

    def _reward(self, state: FloatArray, action: FloatArray) -> float:
        # Scored on the post-step state; the action enters with its own weight
        x, u = float(state[0]), float(action[0])
        return -(self.default_q[0] * x**2 + self.default_r[0] * u**2)

    def _terminated(self, state: FloatArray) -> bool:
        return bool(abs(state[0]) > 1e3)
