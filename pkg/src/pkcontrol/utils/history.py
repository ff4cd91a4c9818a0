"""Run history tracking and persistence.

This module provides the per-seed run record and the ``runs.json`` history
kept in each output directory.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any

from pkcontrol.core.models import RunStatus
from pkcontrol.utils.logging import get_logger

logger = get_logger(__name__)

HISTORY_FILE = "runs.json"
MAX_HISTORY_ENTRIES = 200


@dataclass
class EvalPoint:
    """Evaluation statistics at one point of a training run."""

    env_steps: int
    mean_return: float
    std_return: float

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> EvalPoint:
        return cls(
            env_steps=int(data.get("env_steps", 0)),
            mean_return=float(data.get("mean_return", 0.0)),
            std_return=float(data.get("std_return", 0.0)),
        )


@dataclass
class RunRecord:
    """Record of one seeded run.

    Attributes:
        seed: Run seed.
        config_hash: SHA-256 of the canonical configuration.
        version: Package version that produced the run.
        status: Final run status.
        eval_points: Statistics at every evaluation point.
        checkpoint_path: Final checkpoint, if one was written.
        log_path: Training log CSV.
        wall_clock_seconds: Duration of the run.
        message: Divergence or failure description.
        timestamp: When the run finished.
    """

    seed: int
    config_hash: str
    version: str
    status: RunStatus
    eval_points: list[EvalPoint] = field(default_factory=list)
    checkpoint_path: str | None = None
    log_path: str | None = None
    wall_clock_seconds: float = 0.0
    message: str | None = None
    timestamp: str = field(default_factory=lambda: datetime.now().isoformat())

    @property
    def final_mean_return(self) -> float | None:
        return self.eval_points[-1].mean_return if self.eval_points else None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunRecord:
        """Create a RunRecord from a dictionary.

        Args:
            data: Dictionary with record data.

        Returns:
            RunRecord instance.
        """
        try:
            status = RunStatus(data.get("status", RunStatus.FAILED.value))
        except ValueError:
            status = RunStatus.FAILED
        points = data.get("eval_points", [])
        return cls(
            seed=int(data.get("seed", 0)),
            config_hash=str(data.get("config_hash", "")),
            version=str(data.get("version", "")),
            status=status,
            eval_points=[EvalPoint.from_dict(p) for p in points if isinstance(p, dict)],
            checkpoint_path=str(data["checkpoint_path"]) if data.get("checkpoint_path") else None,
            log_path=str(data["log_path"]) if data.get("log_path") else None,
            wall_clock_seconds=float(data.get("wall_clock_seconds", 0.0)),
            message=str(data["message"]) if data.get("message") else None,
            timestamp=str(data.get("timestamp", "")),
        )

    def to_dict(self) -> dict[str, Any]:
        """Convert record to dictionary for JSON serialization."""
        data = asdict(self)
        data["status"] = self.status.value
        return data


@dataclass
class RunHistory:
    """Container for run records with persistence.

    Attributes:
        history_file: Path to the history JSON file.
        records: Run records, newest first.
    """

    history_file: Path
    records: list[RunRecord] = field(default_factory=list)

    @classmethod
    def for_output_dir(cls, output_dir: Path) -> RunHistory:
        history = cls(history_file=output_dir / HISTORY_FILE)
        history.load()
        return history

    def add_record(self, record: RunRecord) -> RunRecord:
        """Insert a record at the front, trimming to the maximum size."""
        self.records.insert(0, record)
        if len(self.records) > MAX_HISTORY_ENTRIES:
            self.records = self.records[:MAX_HISTORY_ENTRIES]
        logger.debug("Added run record for seed %d", record.seed)
        return record

    def get_recent(self, count: int = 10) -> list[RunRecord]:
        return self.records[:count]

    def clear(self) -> None:
        self.records.clear()
        logger.info("Run history cleared")

    def load(self) -> None:
        """Load history from disk.

        Silently handles missing or corrupt files.
        """
        if not self.history_file.exists():
            logger.debug("No history file found at %s", self.history_file)
            return

        try:
            with self.history_file.open("r", encoding="utf-8") as f:
                data = json.load(f)
            if isinstance(data, list):
                self.records = [RunRecord.from_dict(r) for r in data if isinstance(r, dict)]
                logger.debug("Loaded %d run records", len(self.records))
        except json.JSONDecodeError as e:
            logger.warning("Could not parse history file: %s", e)
            self.records = []
        except (OSError, ValueError, TypeError) as e:
            logger.warning("Could not load history: %s", e)
            self.records = []

    def save(self) -> None:
        """Save history to disk.

        Creates the history directory if it doesn't exist.
        """
        try:
            self.history_file.parent.mkdir(parents=True, exist_ok=True)
            with self.history_file.open("w", encoding="utf-8") as f:
                json.dump([r.to_dict() for r in self.records], f, indent=2, ensure_ascii=False)
            logger.debug("Saved %d run records", len(self.records))
        except OSError as e:
            logger.exception("Could not save history: %s", e)
