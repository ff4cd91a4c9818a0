"""Pytest fixtures for controller, environment and training tests."""

import logging
from collections.abc import Callable, Iterator
from pathlib import Path

import numpy as np
import pytest

from pkcontrol.core.dynamics import make_model
from pkcontrol.core.models import Algorithm, Setpoint
from pkcontrol.core.riccati import DareProblem
from pkcontrol.envs import CartPoleEnv, DoublePendulumEnv, LinearEnv, TrackingEnv
from pkcontrol.policy.controller import LqrHead
from pkcontrol.utils.config import ExperimentConfig, PolicyConfig, RlConfig
from pkcontrol.utils.logging import ROOT_LOGGER

ConfigFactory = Callable[..., ExperimentConfig]


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator so random problem instances are reproducible."""
    return np.random.default_rng(1234)


@pytest.fixture
def restore_logging() -> Iterator[None]:
    """Leave the package logger as the test found it."""
    root = logging.getLogger(ROOT_LOGGER)
    handlers, level = list(root.handlers), root.level
    yield
    for handler in root.handlers:
        if handler not in handlers:
            handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def scalar_problem() -> DareProblem:
    """a = b = q = r = 1, whose DARE solution is the golden ratio."""
    return DareProblem(np.eye(1), np.eye(1), np.eye(1), np.eye(1))


@pytest.fixture
def double_integrator() -> DareProblem:
    """Double integrator with a 0.1 s step."""
    return DareProblem(
        np.array([[1.0, 0.1], [0.0, 1.0]]),
        np.array([[0.0], [0.1]]),
        np.eye(2),
        np.eye(1),
    )


@pytest.fixture
def origin_1d() -> Setpoint:
    return Setpoint(np.zeros(1), np.zeros(1))


@pytest.fixture
def linear_head() -> LqrHead:
    """LQR head on the scalar linear model with its true parameters."""
    return LqrHead(make_model("linear"), np.eye(1), np.eye(1), tau=1.0)


@pytest.fixture
def cartpole_env() -> CartPoleEnv:
    return CartPoleEnv()


@pytest.fixture
def idp_env() -> DoublePendulumEnv:
    return DoublePendulumEnv()


@pytest.fixture
def tracking_env() -> TrackingEnv:
    return TrackingEnv()


@pytest.fixture
def linear_env() -> LinearEnv:
    return LinearEnv()


def small_config(
    output_dir: Path,
    task: str = "linear",
    algorithm: Algorithm = Algorithm.PK_TD3,
    **overrides: object,
) -> ExperimentConfig:
    """A configuration small enough to train in well under a second."""
    fields: dict[str, object] = {
        "task": task,
        "algorithm": algorithm,
        "seeds": (0,),
        "total_env_steps": 60,
        "eval_interval": 30,
        "eval_episodes": 1,
        "output_dir": output_dir,
        "policy": PolicyConfig(hidden_sizes=(8,)),
        "rl": RlConfig(
            batch_episodes=2,
            value_epochs=2,
            buffer_size=500,
            batch_size=16,
            warmup_steps=20,
            critic_hidden_sizes=(8,),
        ),
    }
    fields.update(overrides)
    config = ExperimentConfig(**fields)  # type: ignore[arg-type]
    if task == "linear":
        config.env.max_steps = 20
    return config


@pytest.fixture
def make_config(tmp_path: Path) -> ConfigFactory:
    """Factory for small configurations writing under ``tmp_path / "runs"``."""

    def factory(**kwargs: object) -> ExperimentConfig:
        return small_config(tmp_path / "runs", **kwargs)  # type: ignore[arg-type]

    return factory


@pytest.fixture
def td3_config(tmp_path: Path) -> ExperimentConfig:
    """PK-TD3 on the linear task with a 60-step budget."""
    return small_config(tmp_path / "runs")


@pytest.fixture
def pg_config(tmp_path: Path) -> ExperimentConfig:
    """PK-PG on the linear task with a 60-step budget."""
    return small_config(tmp_path / "runs", algorithm=Algorithm.PK_PG)
