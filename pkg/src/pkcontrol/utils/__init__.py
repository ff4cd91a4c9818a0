"""Utility modules for pkcontrol.

This package contains experiment configuration, structured logging, run
history persistence and seeded random streams.
"""

from pkcontrol.utils.config import ConfigManager, ExperimentConfig, config_hash, parse_config
from pkcontrol.utils.history import RunHistory, RunRecord
from pkcontrol.utils.seeding import RandomStreams

__all__: list[str] = [
    "ConfigManager",
    "ExperimentConfig",
    "RandomStreams",
    "RunHistory",
    "RunRecord",
    "config_hash",
    "parse_config",
]
