"""Versioned JSON checkpoints of trained policies.

A checkpoint stores the flat network parameters, the learned ψ, the LQR
weights and the configuration that produced it, so a policy can be rebuilt
and validated against the task it is loaded for. Floats are written with
``repr`` precision, so a save/load cycle is bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from pkcontrol import __version__
from pkcontrol.core.errors import CheckpointError, ConfigError
from pkcontrol.core.models import FloatArray
from pkcontrol.policy.policies import Policy
from pkcontrol.utils.config import ExperimentConfig, config_hash, config_to_dict, parse_config
from pkcontrol.utils.logging import get_logger

logger = get_logger(__name__)

FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class Checkpoint:
    """In-memory form of a checkpoint file.

    ``kind`` is ``"pk"`` for policies with an LQR head and ``"plain"``
    otherwise.
    """

    config: ExperimentConfig
    config_hash: str
    env_steps: int
    kind: str
    sizes: tuple[int, ...]
    stochastic: bool
    log_std_bounds: tuple[float, float]
    network: FloatArray
    psi_names: tuple[str, ...] = ()
    psi: FloatArray = field(default_factory=lambda: np.zeros(0))
    q_diag: tuple[float, ...] = ()
    r_diag: tuple[float, ...] = ()
    version: str = __version__

    @property
    def task(self) -> str:
        return self.config.task


def make_checkpoint(policy: Policy, config: ExperimentConfig, env_steps: int = 0) -> Checkpoint:
    head = policy.head
    return Checkpoint(
        config=config,
        config_hash=config_hash(config),
        env_steps=env_steps,
        kind="pk" if head is not None else "plain",
        sizes=policy.network.sizes,
        stochastic=policy.stochastic,
        log_std_bounds=policy.log_std_bounds,
        network=policy.network.flatten(),
        psi_names=head.psi_names if head is not None else (),
        psi=policy.psi,
        q_diag=tuple(np.diag(head.q).tolist()) if head is not None else (),
        r_diag=tuple(np.diag(head.r).tolist()) if head is not None else (),
    )


def save_checkpoint(path: Path, checkpoint: Checkpoint) -> Path:
    """Write ``checkpoint`` as JSON, creating parent directories.

    Raises:
        CheckpointError: If the file cannot be written.
    """
    data: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "version": checkpoint.version,
        "kind": checkpoint.kind,
        "task": checkpoint.task,
        "algorithm": checkpoint.config.algorithm.value,
        "config_hash": checkpoint.config_hash,
        "config": config_to_dict(checkpoint.config),
        "env_steps": checkpoint.env_steps,
        "psi": {
            "names": list(checkpoint.psi_names),
            "values": checkpoint.psi.tolist(),
        },
        "q_diag": list(checkpoint.q_diag),
        "r_diag": list(checkpoint.r_diag),
        "network": {
            "sizes": list(checkpoint.sizes),
            "stochastic": checkpoint.stochastic,
            "log_std_bounds": list(checkpoint.log_std_bounds),
            "params": checkpoint.network.tolist(),
        },
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as f:
            json.dump(data, f, indent=1)
            f.write("\n")
    except OSError as e:
        raise CheckpointError(f"could not write checkpoint {path}: {e}") from e
    logger.debug("Checkpoint saved to %s", path)
    return path


def load_checkpoint(path: Path) -> Checkpoint:
    """Read a checkpoint written by :func:`save_checkpoint`.

    Raises:
        CheckpointError: If the file is missing, malformed, of another
            format version, or its embedded config does not match its hash.
    """
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        with path.open("r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"could not read checkpoint {path}: {e}") from e

    if not isinstance(data, dict) or data.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format in {path}")
    try:
        config = parse_config(data["config"])
        net = data["network"]
        psi = data["psi"]
        lo, hi = net["log_std_bounds"]
        checkpoint = Checkpoint(
            config=config,
            config_hash=str(data["config_hash"]),
            env_steps=int(data["env_steps"]),
            kind=str(data["kind"]),
            sizes=tuple(int(s) for s in net["sizes"]),
            stochastic=bool(net["stochastic"]),
            log_std_bounds=(float(lo), float(hi)),
            network=np.array(net["params"], dtype=np.float64),
            psi_names=tuple(str(n) for n in psi["names"]),
            psi=np.array(psi["values"], dtype=np.float64),
            q_diag=tuple(float(v) for v in data["q_diag"]),
            r_diag=tuple(float(v) for v in data["r_diag"]),
            version=str(data.get("version", "")),
        )
    except ConfigError as e:
        raise CheckpointError(f"checkpoint {path} embeds an invalid config: {e}") from e
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"malformed checkpoint {path}: {e}") from e

    if config_hash(config) != checkpoint.config_hash:
        raise CheckpointError(f"config hash mismatch in {path}")
    if checkpoint.psi.shape != (len(checkpoint.psi_names),):
        raise CheckpointError(f"ψ names and values differ in length in {path}")
    return checkpoint


def restore_policy(policy: Policy, checkpoint: Checkpoint) -> Policy:
    """Load the checkpoint's parameters into ``policy`` in place.

    Raises:
        CheckpointError: If the network layout, head kind or ψ names differ.
    """
    kind = "pk" if policy.head is not None else "plain"
    if checkpoint.kind != kind:
        raise CheckpointError(f"checkpoint holds a {checkpoint.kind} policy, expected {kind}")
    if checkpoint.sizes != policy.network.sizes or checkpoint.stochastic != policy.stochastic:
        raise CheckpointError(
            f"checkpoint network {checkpoint.sizes} does not match policy {policy.network.sizes}"
        )
    names = policy.head.psi_names if policy.head is not None else ()
    if checkpoint.psi_names != names:
        raise CheckpointError(
            f"checkpoint ψ {checkpoint.psi_names} does not match policy ψ {names}"
        )
    policy.network.assign(checkpoint.network)
    if names:
        policy.set_psi(checkpoint.psi)
    return policy
