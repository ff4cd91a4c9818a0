"""Core numerics for pkcontrol.

This package contains the dense matrix kernels, dual-number arithmetic, the
Riccati solver with its sensitivities, the partially known dynamics models,
shared records and the error hierarchy.
"""

from pkcontrol.core.dynamics import (
    LinearizedSystem,
    ParamVector,
    PartialModel,
    eval_f,
    linearize,
    make_cartpole,
    make_idp,
    make_model,
    make_unicycle,
    param_jacobians,
)
from pkcontrol.core.errors import (
    CheckpointError,
    ConfigError,
    DivergenceDetectedError,
    InvalidParameterError,
    NotStabilizableError,
    PkControlError,
    SingularMatrixError,
)
from pkcontrol.core.models import (
    ActionMode,
    Algorithm,
    EnvSpec,
    ExitCode,
    ReferenceMode,
    ReferencePoint,
    RunStatus,
    Setpoint,
    StepResult,
    TimeKind,
    TrainingProgress,
    Transition,
)
from pkcontrol.core.progress import ThroughputTracker
from pkcontrol.core.riccati import (
    DareProblem,
    DareSensitivity,
    DareSolution,
    dare_jacobians,
    dare_jacobians_fd,
    lqr_gain,
    solve_dare,
)

__all__: list[str] = [
    "ActionMode",
    "Algorithm",
    "CheckpointError",
    "ConfigError",
    "DareProblem",
    "DareSensitivity",
    "DareSolution",
    "DivergenceDetectedError",
    "EnvSpec",
    "ExitCode",
    "InvalidParameterError",
    "LinearizedSystem",
    "NotStabilizableError",
    "ParamVector",
    "PartialModel",
    "PkControlError",
    "ReferenceMode",
    "ReferencePoint",
    "RunStatus",
    "Setpoint",
    "SingularMatrixError",
    "StepResult",
    "ThroughputTracker",
    "TimeKind",
    "TrainingProgress",
    "Transition",
    "dare_jacobians",
    "dare_jacobians_fd",
    "eval_f",
    "linearize",
    "lqr_gain",
    "make_cartpole",
    "make_idp",
    "make_model",
    "make_unicycle",
    "param_jacobians",
    "solve_dare",
]
