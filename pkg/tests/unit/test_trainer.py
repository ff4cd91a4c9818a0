"""Unit tests for the shared training loop."""

import numpy as np
import pytest

from pkcontrol.core.errors import DivergenceDetectedError, InvalidParameterError
from pkcontrol.core.models import Algorithm, ExitCode, ReferenceMode
from pkcontrol.envs import DoublePendulumEnv, TrackingEnv
from pkcontrol.policy.policies import build_policy
from pkcontrol.rl.td3 import TD3Trainer
from pkcontrol.rl.trainer import make_task_env
from pkcontrol.utils.config import EnvConfig, ExperimentConfig
from pkcontrol.utils.seeding import RandomStreams
from tests.conftest import ConfigFactory


def _trainer(config: ExperimentConfig) -> TD3Trainer:
    env = make_task_env(config)
    return TD3Trainer(env, build_policy(env, config, RandomStreams(0).policy_init), config, 0)


class TestMakeTaskEnv:
    """Tests for building environments from a configuration."""

    def test_tracking_options(self, make_config: ConfigFactory) -> None:
        """Tracking picks up actuator noise, reward weights and the reference mode."""
        config = make_config(
            task="tracking",
            env=EnvConfig(
                actuator_noise=True,
                reward_weights=(2.0, 1.0, 0.5),
                reference_mode=ReferenceMode.TIMED,
            ),
        )
        env = make_task_env(config)
        assert isinstance(env, TrackingEnv)
        assert env.actuator_noise
        assert env.reward_weights == (2.0, 1.0, 0.5)
        assert env.reference_mode is ReferenceMode.TIMED

    def test_idp_preset_override(self, make_config: ConfigFactory) -> None:
        """An explicit preset wins over the configured one."""
        config = make_config(task="idp", env=EnvConfig(preset="upright"))
        env = make_task_env(config, preset="hard-1")
        assert isinstance(env, DoublePendulumEnv)
        assert env.preset == "hard-1"

    def test_horizon_override(self, make_config: ConfigFactory) -> None:
        """max_steps from the configuration sets the horizon."""
        assert make_task_env(make_config()).task_spec.max_steps == 20


class TestDivergenceGuard:
    """Tests for the ψ and loss guard band."""

    def test_non_finite_loss_raises(self, td3_config: ExperimentConfig) -> None:
        """A NaN loss is divergence."""
        with pytest.raises(DivergenceDetectedError) as exc_info:
            _trainer(td3_config)._check_divergence(float("nan"))
        assert exc_info.value.exit_code is ExitCode.DIVERGENCE

    def test_large_psi_raises(self, td3_config: ExperimentConfig) -> None:
        """Mean |ψ| above the guard is divergence."""
        td3_config.rl.divergence_guard = 10.0
        trainer = _trainer(td3_config)
        trainer.policy.set_psi(np.array([50.0, 50.0]))
        with pytest.raises(DivergenceDetectedError, match="diverged"):
            trainer._check_divergence(0.0)

    def test_values_inside_band_pass(self, td3_config: ExperimentConfig) -> None:
        """Finite ψ and losses inside the band pass silently."""
        _trainer(td3_config)._check_divergence(1.0, -3.0)


class TestTrainerLoop:
    def test_evaluate_only_records_step_zero(self, td3_config: ExperimentConfig) -> None:
        """evaluate_only gives exactly the step-0 point."""
        result = _trainer(td3_config).evaluate_only()
        assert [p.env_steps for p in result.eval_points] == [0]
        assert result.env_steps == 0

    def test_eval_interval_schedule(self, make_config: ConfigFactory) -> None:
        """Evaluation falls at step 0 and every eval_interval steps."""
        result = _trainer(make_config(total_env_steps=50, eval_interval=20)).train()
        assert [p.env_steps for p in result.eval_points] == [0, 20, 40]

    def test_apply_gradients_checks_constants(self, td3_config: ExperimentConfig) -> None:
        """Gradient steps re-check the embedded model's known constants."""
        trainer = _trainer(td3_config)
        assert trainer.policy.head is not None
        trainer.policy.head._known_constants["unexpected"] = 1.0
        with pytest.raises(InvalidParameterError):
            trainer.apply_gradients(
                np.zeros(trainer.policy.network.num_params), np.zeros(trainer.policy.num_psi)
            )

    def test_plain_policy_skips_psi(self, make_config: ConfigFactory) -> None:
        """Plain policies have no ψ optimizer work."""
        trainer = _trainer(make_config(algorithm=Algorithm.TD3))
        trainer.apply_gradients(np.zeros(trainer.policy.network.num_params), np.zeros(0))
        assert trainer.policy.num_psi == 0
