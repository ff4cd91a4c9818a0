"""Unicycle tracking of the sine path y = 0.8 sin(x) at a constant speed.

By default the reference point is the nearest point on the path whose progress
does not fall behind the previous one; the timed mode instead advances it at
the target speed every step. Its feedforward input holds a nominal vehicle
on the path: no speed change and the per-interval change in the
curvature-induced turn rate.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from typing import Any, ClassVar

import numpy as np
from scipy.optimize import minimize_scalar

from pkcontrol.core.errors import InvalidParameterError
from pkcontrol.core.models import FloatArray, ReferenceMode, ReferencePoint, StepResult
from pkcontrol.envs.base import Environment, register, wrap_angle

AMPLITUDE = 0.8
TARGET_SPEED = 0.35
LATERAL_LIMIT = 1.5
PROJECTION_WINDOW = 1.0
ACTUATOR_NOISE = 0.05


def path_y(p: float) -> float:
    return AMPLITUDE * math.sin(p)


def path_heading(p: float) -> float:
    """Tangent heading of the path at progress ``p``; atan(0.8) at p = 0."""
    return math.atan(AMPLITUDE * math.cos(p))


def path_curvature(p: float) -> float:
    slope = AMPLITUDE * math.cos(p)
    return -AMPLITUDE * math.sin(p) / (1.0 + slope * slope) ** 1.5


def path_advance(p: float, distance: float) -> float:
    """Progress after travelling ``distance`` along the path from ``p`` (first order)."""
    slope = AMPLITUDE * math.cos(p)
    return p + distance / math.sqrt(1.0 + slope * slope)


@register
class TrackingEnv(Environment):
    """State (x, y, θ, v, ω); actions are per-interval changes (δv, δω)."""

    name = "tracking"
    model_name = "unicycle"
    angle_indices = (2,)
    refresh_every_step = True
    dt = 0.1
    max_steps = 600
    action_low = (-0.1, -0.2)
    action_high = (0.1, 0.2)
    default_q = (1.0, 1.0, 1.0, 1.0, 0.1)
    default_r = (1.0, 1.0)
    default_psi_init = (1.0, 1.0)
    presets: ClassVar[dict[str, tuple[float, ...]]] = {
        "upper": (0.0, 0.5, 0.0, 0.0, 0.0),
        "lower": (0.0, -0.5, 0.0, 0.0, 0.0),
    }

    def __init__(
        self,
        *args: object,
        actuator_noise: bool = False,
        reward_weights: Sequence[float] | None = None,
        reference_mode: ReferenceMode | None = None,
        **kwargs: object,
    ) -> None:
        super().__init__(*args, **kwargs)  # type: ignore[arg-type]
        self.actuator_noise = actuator_noise
        self.reference_mode = ReferenceMode.NEAREST if reference_mode is None else reference_mode
        weights = (1.0, 1.0, 1.0) if reward_weights is None else tuple(reward_weights)
        if len(weights) != 3 or any(w < 0 for w in weights):
            raise InvalidParameterError("reward_weights must be three nonnegative numbers")
        self.reward_weights = weights
        self._progress = 0.0

    @property
    def progress(self) -> float:
        return self._progress

    def tracking_errors(self, state: FloatArray) -> tuple[float, float, float]:
        """Heading error, lateral (y) deviation and speed error at ``state``."""
        x, y, theta, v = (float(s) for s in state[:4])
        e_theta = float(wrap_angle(theta - path_heading(x)))
        return e_theta, y - path_y(x), v - TARGET_SPEED

    def reference_at(self, obs: FloatArray) -> ReferencePoint:
        """Reference at the projection of ``obs`` onto the path, never moving backwards.

        In timed mode ``obs`` is ignored and the current scheduled point is returned.
        """
        if self.reference_mode is ReferenceMode.TIMED:
            return self.reference_for_progress(self._progress)
        x, y = float(obs[0]), float(obs[1])
        lo = self._progress
        result = minimize_scalar(
            lambda p: (x - p) ** 2 + (y - path_y(p)) ** 2,
            bounds=(lo, lo + PROJECTION_WINDOW),
            method="bounded",
            options={"xatol": 1e-10},
        )
        p = max(lo, float(result.x))
        self._progress = p
        return self.reference_for_progress(p)

    def reference_for_progress(self, p: float) -> ReferencePoint:
        omega = path_curvature(p) * TARGET_SPEED
        p_next = path_advance(p, TARGET_SPEED * self.dt)
        delta_omega = path_curvature(p_next) * TARGET_SPEED - omega
        x_d = np.array([p, path_y(p), path_heading(p), TARGET_SPEED, omega])
        return ReferencePoint(x_d=x_d, u_d=np.array([0.0, delta_omega]), progress=p)

    def step(self, action: FloatArray) -> StepResult:
        if self.reference_mode is ReferenceMode.TIMED:
            # scheduled point for the state this step arrives in
            self._progress = path_advance(self._progress, TARGET_SPEED * self.dt)
        return super().step(action)

    def _on_reset(self) -> None:
        self._progress = 0.0

    def _info(self) -> dict[str, Any]:
        return {"progress": self._progress}

    def _actuate(self, action: FloatArray) -> FloatArray:
        if not self.actuator_noise:
            return action
        return action * (1.0 + self.np_random.uniform(-ACTUATOR_NOISE, ACTUATOR_NOISE, size=2))

    def _sample_initial_state(self, rng: np.random.Generator) -> FloatArray:
        return np.array(
            [
                0.0,
                rng.uniform(-0.5, 0.5),
                path_heading(0.0) + rng.uniform(-0.2, 0.2),
                0.0,
                0.0,
            ]
        )

    def _reward(self, state: FloatArray, action: FloatArray) -> float:
        e_theta, e_y, e_v = self.tracking_errors(state)
        w_theta, w_y, w_v = self.reward_weights
        return -(w_theta * e_theta**2 + w_y * e_y**2 + w_v * e_v**2)

    def _terminated(self, state: FloatArray) -> bool:
        return abs(self.tracking_errors(state)[1]) > LATERAL_LIMIT
