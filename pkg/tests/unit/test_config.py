"""Unit tests for the config module.

Tests for:
- ExperimentConfig defaults and sections
- parse_config / validate_config error reporting
- Canonical serialization and hashing
- ConfigManager load and save
"""

import json
from pathlib import Path

import pytest


class TestExperimentConfigDefaults:
    """Tests for ExperimentConfig defaults."""

    def test_defaults_are_valid(self) -> None:
        """The default configuration should pass validation."""
        from pkcontrol.utils.config import ExperimentConfig, validate_config

        validate_config(ExperimentConfig())

    def test_default_algorithm_is_pk_pg(self) -> None:
        """ExperimentConfig algorithm should default to PK_PG."""
        from pkcontrol.core.models import Algorithm
        from pkcontrol.utils.config import ExperimentConfig

        assert ExperimentConfig().algorithm is Algorithm.PK_PG

    def test_model_name_follows_task(self) -> None:
        """model_name should map the task to its embedded model."""
        from pkcontrol.utils.config import ExperimentConfig

        assert ExperimentConfig(task="tracking").model_name == "unicycle"
        assert ExperimentConfig(task="idp").model_name == "idp"

    def test_sections_are_independent(self) -> None:
        """Each instance should own its nested sections."""
        from pkcontrol.utils.config import ExperimentConfig

        first, second = ExperimentConfig(), ExperimentConfig()
        first.env.physics["m_p"] = 0.2
        assert second.env.physics == {}


class TestParseConfig:
    """Tests for parse_config."""

    def test_parses_nested_sections(self) -> None:
        """parse_config should fill nested sections and coerce types."""
        from pkcontrol.core.models import Algorithm
        from pkcontrol.utils.config import parse_config

        config = parse_config(
            {
                "task": "linear",
                "algorithm": "pk-td3",
                "seeds": [3, 4],
                "output_dir": "out/runs",
                "policy": {"hidden_sizes": [16, 16], "psi_init": [1, 2]},
                "rl": {"lr_psi": 1},
            }
        )
        assert config.algorithm is Algorithm.PK_TD3
        assert config.seeds == (3, 4)
        assert config.output_dir == Path("out/runs")
        assert config.policy.hidden_sizes == (16, 16)
        assert config.policy.psi_init == (1.0, 2.0)
        assert config.rl.lr_psi == 1.0

    def test_unknown_key_reports_dotted_path(self) -> None:
        """Unknown keys should be reported with their dotted path."""
        from pkcontrol.core.errors import ConfigError
        from pkcontrol.utils.config import parse_config

        with pytest.raises(ConfigError, match=r"rl\.learning_rate"):
            parse_config({"rl": {"learning_rate": 0.1}})

    def test_unknown_top_level_key(self) -> None:
        """Unknown top-level keys should be reported by name."""
        from pkcontrol.core.errors import ConfigError
        from pkcontrol.utils.config import parse_config

        with pytest.raises(ConfigError, match="epochs"):
            parse_config({"epochs": 3})

    def test_wrong_type_reports_path(self) -> None:
        """A string where an integer belongs should name the field."""
        from pkcontrol.core.errors import ConfigError
        from pkcontrol.utils.config import parse_config

        with pytest.raises(ConfigError, match="total_env_steps"):
            parse_config({"total_env_steps": "many"})

    def test_bool_is_not_an_integer(self) -> None:
        """Booleans should not pass as integers."""
        from pkcontrol.core.errors import ConfigError
        from pkcontrol.utils.config import parse_config

        with pytest.raises(ConfigError):
            parse_config({"eval_episodes": True})

    def test_invalid_algorithm_lists_choices(self) -> None:
        """An unknown algorithm should list the valid names."""
        from pkcontrol.core.errors import ConfigError
        from pkcontrol.utils.config import parse_config

        with pytest.raises(ConfigError, match="pk-pg"):
            parse_config({"algorithm": "sac"})

    def test_non_object_document(self) -> None:
        """A JSON list is not a configuration."""
        from pkcontrol.core.errors import ConfigError
        from pkcontrol.utils.config import parse_config

        with pytest.raises(ConfigError):
            parse_config([1, 2])  # type: ignore[arg-type]


class TestValidateConfig:
    """Tests for cross-field validation."""

    @pytest.mark.parametrize(
        "data",
        [
            {"task": "acrobot"},
            {"task": "cartpole", "model": {"name": "idp"}},
            {"seeds": []},
            {"seeds": [1, 1]},
            {"total_env_steps": 0},
            {"policy": {"log_std_min": 1.0, "log_std_max": 0.0}},
            {"policy": {"pullback": 1.5}},
            {"policy": {"tau": 0.0}},
            {"rl": {"gamma": 1.5}},
            {"rl": {"optimizer": "rmsprop"}},
            {"rl": {"batch_size": 0}},
            {"env": {"actuator_noise": True}},
            {"task": "cartpole", "env": {"reset_position_noise": 0.1}},
            {"task": "linear", "env": {"reference_mode": "timed"}},
            {"task": "tracking", "env": {"reference_mode": "ahead"}},
        ],
    )
    def test_rejects_invalid_values(self, data: dict[str, object]) -> None:
        """Constraint violations should raise ConfigError."""
        from pkcontrol.core.errors import ConfigError
        from pkcontrol.utils.config import parse_config

        with pytest.raises(ConfigError):
            parse_config(data)

    def test_tracking_options_on_tracking_task(self) -> None:
        """Tracking options should be accepted for the tracking task."""
        from pkcontrol.core.models import ReferenceMode
        from pkcontrol.utils.config import parse_config

        config = parse_config(
            {
                "task": "tracking",
                "env": {
                    "actuator_noise": True,
                    "reward_weights": [1, 2, 3],
                    "reference_mode": "timed",
                },
            }
        )
        assert config.env.reward_weights == (1.0, 2.0, 3.0)
        assert config.env.reference_mode is ReferenceMode.TIMED

    def test_config_error_exit_code(self) -> None:
        """ConfigError should map to the validation exit code."""
        from pkcontrol.core.errors import ConfigError
        from pkcontrol.core.models import ExitCode

        assert ConfigError("x").exit_code is ExitCode.VALIDATION_ERROR


class TestSerialization:
    """Tests for config_to_dict, canonical_json and config_hash."""

    def test_round_trip(self) -> None:
        """parse_config should invert config_to_dict."""
        from pkcontrol.utils.config import (
            ExperimentConfig,
            PolicyConfig,
            config_to_dict,
            parse_config,
        )

        config = ExperimentConfig(
            task="idp", policy=PolicyConfig(hidden_sizes=(32,), psi_init=(1, 2, 3, 4, 5))
        )
        assert parse_config(config_to_dict(config)) == config

    def test_hash_is_stable(self) -> None:
        """Equal configurations should hash equally across instances."""
        from pkcontrol.utils.config import ExperimentConfig, config_hash

        assert config_hash(ExperimentConfig()) == config_hash(ExperimentConfig())
        assert len(config_hash(ExperimentConfig())) == 64

    def test_hash_changes_with_content(self) -> None:
        """Changing any value should change the hash."""
        from pkcontrol.utils.config import ExperimentConfig, config_hash

        assert config_hash(ExperimentConfig()) != config_hash(ExperimentConfig(eval_interval=7))

    def test_canonical_json_sorts_keys(self) -> None:
        """Canonical JSON should be compact with sorted keys."""
        from pkcontrol.utils.config import ExperimentConfig, canonical_json

        text = canonical_json(ExperimentConfig())
        data = json.loads(text)
        assert list(data) == sorted(data)
        assert ", " not in text and ": " not in text


class TestWithOverrides:
    """Tests for command-line overrides."""

    def test_overrides_apply(self, tmp_path: Path) -> None:
        """Seed, output directory and preset should be replaced."""
        from pkcontrol.utils.config import ExperimentConfig, with_overrides

        config = with_overrides(
            ExperimentConfig(task="idp"), output_dir=tmp_path, seed=9, preset="hard-2"
        )
        assert config.seeds == (9,)
        assert config.output_dir == tmp_path
        assert config.env.preset == "hard-2"

    def test_original_is_unchanged(self) -> None:
        """Overrides should return a new configuration."""
        from pkcontrol.utils.config import ExperimentConfig, with_overrides

        original = ExperimentConfig()
        with_overrides(original, seed=3)
        assert original.seeds == (0, 1, 2, 3, 4)


class TestConfigManager:
    """Tests for ConfigManager load and save."""

    def test_save_then_load(self, tmp_path: Path) -> None:
        """A saved configuration should load back equal."""
        from pkcontrol.utils.config import ConfigManager, ExperimentConfig

        config = ExperimentConfig(task="linear", total_env_steps=1234)
        manager = ConfigManager(tmp_path / "nested" / "experiment.json")
        manager.save(config)
        assert manager.load() == config

    def test_load_missing_file_raises(self, tmp_path: Path) -> None:
        """A missing experiment file should raise instead of falling back to defaults."""
        from pkcontrol.core.errors import ConfigError
        from pkcontrol.utils.config import ConfigManager

        with pytest.raises(ConfigError, match="not found"):
            ConfigManager(tmp_path / "missing.json").load()

    def test_load_corrupted_json_raises(self, tmp_path: Path) -> None:
        """Corrupted JSON should raise ConfigError."""
        from pkcontrol.core.errors import ConfigError
        from pkcontrol.utils.config import ConfigManager

        path = tmp_path / "experiment.json"
        path.write_text("{ invalid json }", encoding="utf-8")
        with pytest.raises(ConfigError, match="JSON"):
            ConfigManager(path).load()

    def test_load_partial_config_fills_defaults(self, tmp_path: Path) -> None:
        """Missing keys should take their defaults."""
        from pkcontrol.utils.config import ConfigManager, RlConfig

        path = tmp_path / "experiment.json"
        path.write_text(json.dumps({"task": "linear", "rl": {"gamma": 0.9}}), encoding="utf-8")
        config = ConfigManager(path).load()
        assert config.rl.gamma == 0.9
        assert config.rl.batch_size == RlConfig().batch_size
