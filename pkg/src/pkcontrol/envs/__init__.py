"""Simulation environments.

Importing this package registers every built-in task with the registry in
:mod:`pkcontrol.envs.base`.
"""

from pkcontrol.envs.base import (
    ENVIRONMENTS,
    Environment,
    integrate,
    make_env,
    rk4_step,
    start_episode,
)
from pkcontrol.envs.cartpole import CartPoleEnv
from pkcontrol.envs.double_pendulum import DoublePendulumEnv
from pkcontrol.envs.linear import LinearEnv
from pkcontrol.envs.tracking import TrackingEnv

__all__: list[str] = [
    "ENVIRONMENTS",
    "CartPoleEnv",
    "DoublePendulumEnv",
    "Environment",
    "LinearEnv",
    "TrackingEnv",
    "integrate",
    "make_env",
    "rk4_step",
    "start_episode",
]
