"""Trainers, critics, optimizers and evaluation."""

from pkcontrol.rl.buffer import ReplayBatch, ReplayBuffer
from pkcontrol.rl.critic import TwinCritic, ValueBaseline, polyak_update
from pkcontrol.rl.evaluation import (
    EvaluationResult,
    LogRow,
    TrainingLog,
    Trajectory,
    evaluate_policy,
    read_training_log,
    rollout,
)
from pkcontrol.rl.optim import SGD, Adam, Optimizer, clip_grad_norm, make_optimizer
from pkcontrol.rl.pg import PGTrainer, normalize_advantages, reward_to_go
from pkcontrol.rl.td3 import TD3Trainer
from pkcontrol.rl.trainer import Trainer, TrainingResult, make_task_env

__all__: list[str] = [
    "SGD",
    "Adam",
    "EvaluationResult",
    "LogRow",
    "Optimizer",
    "PGTrainer",
    "ReplayBatch",
    "ReplayBuffer",
    "TD3Trainer",
    "Trainer",
    "TrainingLog",
    "TrainingResult",
    "Trajectory",
    "TwinCritic",
    "ValueBaseline",
    "clip_grad_norm",
    "evaluate_policy",
    "make_optimizer",
    "make_task_env",
    "normalize_advantages",
    "polyak_update",
    "read_training_log",
    "reward_to_go",
    "rollout",
]
