"""Exception hierarchy for pkcontrol.

Library code raises these; only the command-line layer turns them into
exit codes.
"""

from __future__ import annotations

from typing import ClassVar

from pkcontrol.core.models import ExitCode


class PkControlError(Exception):
    """Base class for all pkcontrol errors."""

    exit_code: ClassVar[ExitCode] = ExitCode.VALIDATION_ERROR


class SingularMatrixError(PkControlError):
    """A linear system has a pivot below the singularity threshold."""


class NotStabilizableError(PkControlError):
    """The Riccati iteration did not reach a stabilizing solution."""

    exit_code = ExitCode.DIVERGENCE


class InvalidParameterError(PkControlError):
    """A physical constant, dimension, or matrix entry is invalid."""


class DivergenceDetectedError(PkControlError):
    """Training parameters or losses left the configured guard band."""

    exit_code = ExitCode.DIVERGENCE


class ConfigError(PkControlError):
    """An experiment configuration failed validation."""


class CheckpointError(PkControlError):
    """A checkpoint could not be read or does not match the task."""
