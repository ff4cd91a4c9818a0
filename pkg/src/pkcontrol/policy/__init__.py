"""Policies: the corrective network, the differentiable LQR head and checkpoints."""

from pkcontrol.policy.checkpoint import (
    Checkpoint,
    load_checkpoint,
    make_checkpoint,
    restore_policy,
    save_checkpoint,
)
from pkcontrol.policy.controller import LqrCache, LqrHead, gain_derivatives
from pkcontrol.policy.mlp import MlpParams, mlp_backward, mlp_forward, mlp_jacobian
from pkcontrol.policy.policies import ActionWithGrads, Policy, build_head, build_policy

__all__: list[str] = [
    "ActionWithGrads",
    "Checkpoint",
    "LqrCache",
    "LqrHead",
    "MlpParams",
    "Policy",
    "build_head",
    "build_policy",
    "gain_derivatives",
    "load_checkpoint",
    "make_checkpoint",
    "mlp_backward",
    "mlp_forward",
    "mlp_jacobian",
    "restore_policy",
    "save_checkpoint",
]
