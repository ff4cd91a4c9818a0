"""Ring-storage replay buffer for off-policy training."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pkcontrol.core.errors import InvalidParameterError
from pkcontrol.core.models import EnvSpec, FloatArray, Setpoint, Transition


@dataclass(frozen=True, eq=False)
class ReplayBatch:
    """Column-stacked sample of transitions; references as setpoint lists."""

    obs: FloatArray
    action: FloatArray
    reward: FloatArray
    next_obs: FloatArray
    terminated: FloatArray
    refs: list[Setpoint]
    next_refs: list[Setpoint]

    def __len__(self) -> int:
        return int(self.reward.shape[0])


class ReplayBuffer:
    """Fixed-capacity buffer overwriting the oldest transitions first.

    Sampling is uniform with replacement over the stored items.
    """

    def __init__(self, capacity: int, spec: EnvSpec) -> None:
        if capacity < 1:
            raise InvalidParameterError(f"capacity must be positive, got {capacity}")
        n, m = spec.obs_dim, spec.act_dim
        self.capacity = capacity
        self.spec = spec
        self._obs = np.zeros((capacity, n))
        self._action = np.zeros((capacity, m))
        self._reward = np.zeros(capacity)
        self._next_obs = np.zeros((capacity, n))
        self._terminated = np.zeros(capacity)
        self._ref_x = np.zeros((capacity, n))
        self._ref_u = np.zeros((capacity, m))
        self._next_ref_x = np.zeros((capacity, n))
        self._next_ref_u = np.zeros((capacity, m))
        self._idx = 0
        self.insertions = 0

    def __len__(self) -> int:
        return min(self.insertions, self.capacity)

    def add(self, t: Transition) -> None:
        """Store one transition.

        Raises:
            InvalidParameterError: On a dimension mismatch or non-finite reward.
        """
        if t.obs.shape != (self.spec.obs_dim,) or t.action.shape != (self.spec.act_dim,):
            raise InvalidParameterError("transition dimensions do not match the environment")
        if not np.isfinite(t.reward):
            raise InvalidParameterError(f"non-finite reward {t.reward}")
        i = self._idx
        self._obs[i] = t.obs
        self._action[i] = t.action
        self._reward[i] = t.reward
        self._next_obs[i] = t.next_obs
        self._terminated[i] = float(t.terminated)
        self._ref_x[i] = t.ref.x_d
        self._ref_u[i] = t.ref.u_d
        self._next_ref_x[i] = t.next_ref.x_d
        self._next_ref_u[i] = t.next_ref.u_d
        self._idx = (i + 1) % self.capacity
        self.insertions += 1

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if len(self) == 0:
            raise InvalidParameterError("cannot sample from an empty buffer")
        return rng.integers(0, len(self), size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> ReplayBatch:
        idx = self.sample_indices(batch_size, rng)
        return ReplayBatch(
            obs=self._obs[idx],
            action=self._action[idx],
            reward=self._reward[idx],
            next_obs=self._next_obs[idx],
            terminated=self._terminated[idx],
            refs=[Setpoint(self._ref_x[i].copy(), self._ref_u[i].copy()) for i in idx],
            next_refs=[
                Setpoint(self._next_ref_x[i].copy(), self._next_ref_u[i].copy()) for i in idx
            ],
        )
