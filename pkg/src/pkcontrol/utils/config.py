"""Experiment configuration management for pkcontrol.

This module provides the experiment configuration tree, its strict JSON
persistence and the configuration hash stored alongside every artifact.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import types
import typing
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, TypeVar

from pkcontrol.core.errors import ConfigError
from pkcontrol.core.models import Algorithm, ReferenceMode
from pkcontrol.utils.logging import get_logger

logger = get_logger(__name__)

# Task name -> name of the model family its policies embed
TASK_MODELS: dict[str, str] = {
    "cartpole": "cartpole",
    "idp": "idp",
    "tracking": "unicycle",
    "linear": "linear",
}


@dataclass
class PolicyConfig:
    """Policy network and LQR-head settings.

    Attributes:
        hidden_sizes: Hidden layer widths of the corrective (or plain) network.
        init_scale: Standard deviation of hidden-layer weights; None selects
            ``1/sqrt(fan_in)``.
        log_std_init: Initial log standard deviation of the stochastic head.
        log_std_min: Lower clamp of the log standard deviation.
        log_std_max: Upper clamp of the log standard deviation.
        psi_init: Initial ψ for the embedded model; task default when None.
        q_diag: Diagonal of the LQR state weight; task default when None.
        r_diag: Diagonal of the LQR input weight; task default when None.
        tau: Discretization step of the embedded model; task dt when None.
        pullback: Fraction of the way ψ moves back to the last stabilizable
            value after a failed Riccati solve.
        memo_size: Number of refreshed LQR heads kept per policy.
    """

    hidden_sizes: tuple[int, ...] = (64, 64)
    init_scale: float | None = 1e-2
    log_std_init: float = -1.0
    log_std_min: float = -5.0
    log_std_max: float = 1.0
    psi_init: tuple[float, ...] | None = None
    q_diag: tuple[float, ...] | None = None
    r_diag: tuple[float, ...] | None = None
    tau: float | None = None
    pullback: float = 0.5
    memo_size: int = 64


@dataclass
class RlConfig:
    """Trainer hyperparameters shared by policy gradient and TD3."""

    optimizer: str = "adam"
    lr_mlp: float = 1e-3
    lr_psi: float = 1e-4
    lr_critic: float = 1e-3
    lr_value: float = 1e-3
    max_grad_norm: float = 10.0
    gamma: float = 0.99
    batch_episodes: int = 5
    value_epochs: int = 20
    buffer_size: int = 100_000
    batch_size: int = 256
    warmup_steps: int = 1000
    # PK policies explore around their LQR prior during warm-up; false samples uniformly
    pk_prior_warmup: bool = True
    policy_delay: int = 2
    polyak: float = 0.995
    exploration_noise: float = 0.1
    target_noise: float = 0.2
    target_noise_clip: float = 0.5
    critic_hidden_sizes: tuple[int, ...] = (64, 64)
    divergence_guard: float = 1e6


@dataclass
class EnvConfig:
    """Environment options; task-specific keys are rejected for other tasks."""

    preset: str | None = None
    max_steps: int | None = None
    physics: dict[str, float] = field(default_factory=dict)
    constants: dict[str, float] = field(default_factory=dict)
    actuator_noise: bool = False
    reward_weights: tuple[float, ...] | None = None
    reference_mode: ReferenceMode | None = None
    reset_position_noise: float | None = None
    reset_velocity_range: float | None = None


@dataclass
class ModelConfig:
    """Embedded model; ``name`` must match the task's model when given."""

    name: str | None = None
    constants: dict[str, float] = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    """Declarative description of one seeded training or evaluation run.

    Attributes:
        task: Task name (see TASK_MODELS).
        algorithm: Training algorithm.
        seeds: Seeds run independently by ``train``.
        total_env_steps: Environment-step budget per seed.
        eval_interval: Environment steps between evaluation points.
        eval_episodes: Episodes per evaluation point.
        output_dir: Root directory for all run artifacts.
        max_workers: Per-seed runs executing concurrently.
    """

    task: str = "cartpole"
    algorithm: Algorithm = Algorithm.PK_PG
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    total_env_steps: int = 30_000
    eval_interval: int = 500
    eval_episodes: int = 5
    output_dir: Path = Path("runs")
    max_workers: int = 1
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    rl: RlConfig = field(default_factory=RlConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    model: ModelConfig = field(default_factory=ModelConfig)

    @property
    def model_name(self) -> str:
        return TASK_MODELS[self.task]


T = TypeVar("T")


def _coerce(path: str, value: Any, hint: Any) -> Any:
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)

    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(path, value, inner[0])
    if dataclasses.is_dataclass(hint) and isinstance(hint, type):
        if not isinstance(value, Mapping):
            raise ConfigError(f"'{path}' must be a section (object)")
        return _parse_section(hint, value, path)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"'{path}' must be a list")
        return tuple(_coerce(f"{path}[{i}]", v, args[0]) for i, v in enumerate(value))
    if origin is dict:
        if not isinstance(value, Mapping):
            raise ConfigError(f"'{path}' must be an object")
        return {str(k): _coerce(f"{path}.{k}", v, args[1]) for k, v in value.items()}
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"'{path}' must be true or false")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"'{path}' must be an integer")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"'{path}' must be a number")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"'{path}' must be a string")
        return value
    if hint is Path:
        if not isinstance(value, (str, Path)):
            raise ConfigError(f"'{path}' must be a path string")
        return Path(value)
    if isinstance(hint, type) and issubclass(hint, Enum):
        try:
            return hint(value)
        except ValueError as e:
            choices = ", ".join(str(m.value) for m in hint)
            raise ConfigError(f"'{path}' must be one of: {choices}") from e
    raise ConfigError(f"'{path}' has unsupported type {hint!r}")


def _parse_section(cls: type[T], data: Mapping[str, Any], prefix: str = "") -> T:
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}  # type: ignore[arg-type]
    unknown = sorted(set(data) - names)
    if unknown:
        dotted = ", ".join(f"{prefix}.{k}" if prefix else k for k in unknown)
        raise ConfigError(f"unknown configuration key(s): {dotted}")
    kwargs = {
        key: _coerce(f"{prefix}.{key}" if prefix else key, value, hints[key])
        for key, value in data.items()
    }
    return cls(**kwargs)


def _to_jsonable(value: Any) -> Any:
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: _to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return value.as_posix()
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    return value


def validate_config(config: ExperimentConfig) -> None:
    """Check cross-field constraints.

    Raises:
        ConfigError: On the first violated constraint.
    """
    if config.task not in TASK_MODELS:
        raise ConfigError(f"unknown task '{config.task}'; choose from {sorted(TASK_MODELS)}")
    if config.model.name is not None and config.model.name != config.model_name:
        raise ConfigError(
            f"model '{config.model.name}' does not match task '{config.task}' "
            f"(expects '{config.model_name}')"
        )
    if not config.seeds:
        raise ConfigError("seeds must not be empty")
    if len(set(config.seeds)) != len(config.seeds):
        raise ConfigError("seeds must be unique")
    for key in ("total_env_steps", "eval_interval", "eval_episodes", "max_workers"):
        if getattr(config, key) < 1:
            raise ConfigError(f"{key} must be positive")

    policy, rl, env = config.policy, config.rl, config.env
    if not policy.hidden_sizes or any(h < 1 for h in policy.hidden_sizes):
        raise ConfigError("policy.hidden_sizes must be positive widths")
    if not rl.critic_hidden_sizes or any(h < 1 for h in rl.critic_hidden_sizes):
        raise ConfigError("rl.critic_hidden_sizes must be positive widths")
    if policy.log_std_min >= policy.log_std_max:
        raise ConfigError("policy.log_std_min must be below policy.log_std_max")
    if policy.tau is not None and policy.tau <= 0:
        raise ConfigError("policy.tau must be positive")
    if not 0.0 <= policy.pullback <= 1.0:
        raise ConfigError("policy.pullback must lie in [0, 1]")
    if policy.memo_size < 1:
        raise ConfigError("policy.memo_size must be positive")
    if policy.init_scale is not None and policy.init_scale < 0:
        raise ConfigError("policy.init_scale must be nonnegative")

    if rl.optimizer not in ("adam", "sgd"):
        raise ConfigError("rl.optimizer must be 'adam' or 'sgd'")
    for key in ("lr_mlp", "lr_psi", "lr_critic", "lr_value"):
        if getattr(rl, key) < 0:
            raise ConfigError(f"rl.{key} must be nonnegative")
    for key in ("batch_episodes", "value_epochs", "buffer_size", "batch_size", "policy_delay"):
        if getattr(rl, key) < 1:
            raise ConfigError(f"rl.{key} must be positive")
    if rl.warmup_steps < 0:
        raise ConfigError("rl.warmup_steps must be nonnegative")
    if not 0.0 <= rl.gamma <= 1.0:
        raise ConfigError("rl.gamma must lie in [0, 1]")
    if not 0.0 <= rl.polyak <= 1.0:
        raise ConfigError("rl.polyak must lie in [0, 1]")
    if rl.max_grad_norm <= 0 or rl.divergence_guard <= 0:
        raise ConfigError("rl.max_grad_norm and rl.divergence_guard must be positive")

    if env.max_steps is not None and env.max_steps < 1:
        raise ConfigError("env.max_steps must be positive")
    tracking_only = env.reward_weights is not None or env.reference_mode is not None
    if config.task != "tracking" and (env.actuator_noise or tracking_only):
        raise ConfigError(
            "env.actuator_noise, env.reward_weights and env.reference_mode apply to the "
            "tracking task only"
        )
    if config.task != "idp" and (
        env.reset_position_noise is not None or env.reset_velocity_range is not None
    ):
        raise ConfigError("env.reset_* ranges apply to the idp task only")


def parse_config(data: Mapping[str, Any]) -> ExperimentConfig:
    """Build and validate an ExperimentConfig from a JSON-like mapping.

    Raises:
        ConfigError: For unknown keys (reported with their dotted path),
            wrong value types or violated constraints.
    """
    if not isinstance(data, Mapping):
        raise ConfigError("configuration document must be an object")
    config = _parse_section(ExperimentConfig, data)
    validate_config(config)
    return config


def config_to_dict(config: ExperimentConfig) -> dict[str, Any]:
    """JSON-compatible nested dictionary; ``parse_config`` inverts it."""
    result: dict[str, Any] = _to_jsonable(config)
    return result


def canonical_json(config: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 hex digest of the canonical JSON serialization."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def with_overrides(
    config: ExperimentConfig,
    output_dir: Path | None = None,
    seed: int | None = None,
    preset: str | None = None,
) -> ExperimentConfig:
    """Apply command-line overrides and re-validate."""
    env = dataclasses.replace(config.env, preset=preset) if preset is not None else config.env
    updated = dataclasses.replace(
        config,
        output_dir=output_dir if output_dir is not None else config.output_dir,
        seeds=(seed,) if seed is not None else config.seeds,
        env=env,
    )
    validate_config(updated)
    return updated


class ConfigManager:
    """Manages experiment configuration persistence.

    Unlike an application settings file, an experiment file is never
    silently replaced by defaults: missing, corrupt or invalid documents
    raise ConfigError.
    """

    def __init__(self, config_path: Path) -> None:
        """Initialize ConfigManager with the configuration file path.

        Args:
            config_path: JSON configuration file.
        """
        self._config_file = config_path

    def load(self) -> ExperimentConfig:
        """Load and validate the configuration file.

        Raises:
            ConfigError: If the file is missing, unreadable, not valid JSON
                or fails validation.
        """
        if not self._config_file.exists():
            raise ConfigError(f"configuration file not found: {self._config_file}")
        try:
            with self._config_file.open("r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"configuration file is not valid JSON: {e}") from e
        except OSError as e:
            raise ConfigError(f"failed to read configuration file: {e}") from e

        config = parse_config(data)
        logger.debug("Loaded config %s (hash %s)", self._config_file, config_hash(config))
        return config

    def save(self, config: ExperimentConfig) -> None:
        """Save the configuration, creating parent directories as needed.

        Raises:
            OSError: If the configuration file cannot be written.
        """
        self._config_file.parent.mkdir(parents=True, exist_ok=True)
        with self._config_file.open("w", encoding="utf-8") as f:
            json.dump(config_to_dict(config), f, indent=2, ensure_ascii=False)
            f.write("\n")
        logger.debug("Config saved to %s", self._config_file)
