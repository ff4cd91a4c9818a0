"""Background workers for per-seed runs.

This module provides a worker that runs one seeded training run in a
background thread, and a scheduler that runs every seed of an experiment
with a bounded number of concurrent workers.
"""

from __future__ import annotations

import threading
from collections.abc import Callable

from pkcontrol import __version__
from pkcontrol.core.models import RunStatus, TrainingProgress
from pkcontrol.harness.runner import RunEngine
from pkcontrol.utils.config import ExperimentConfig, config_hash
from pkcontrol.utils.history import RunRecord
from pkcontrol.utils.logging import get_logger

logger = get_logger(__name__)


class RunWorker:
    """Runs one seed in a background thread with progress reporting.

    Callbacks are invoked from the worker thread. Runs share no mutable
    state, so callbacks only need to guard what they themselves share.

    Example:
        >>> worker = RunWorker(
        ...     config=config,
        ...     seed=0,
        ...     on_progress=print_progress,
        ...     on_complete=collect_record,
        ...     on_error=report_error,
        ... )
        >>> worker.start()
        >>> worker.join()
    """

    def __init__(
        self,
        config: ExperimentConfig,
        seed: int,
        on_progress: Callable[[int, TrainingProgress], None] | None = None,
        on_complete: Callable[[RunRecord], None] | None = None,
        on_error: Callable[[int, str], None] | None = None,
    ) -> None:
        """Initialize the run worker.

        Args:
            config: Experiment configuration.
            seed: Seed of this run.
            on_progress: Called at every evaluation point with the seed.
            on_complete: Called with the finished run record.
            on_error: Called with the seed and message if the run fails.
        """
        self._config = config
        self._seed = seed
        self._on_progress = on_progress
        self._on_complete = on_complete
        self._on_error = on_error

        self._engine = RunEngine()
        self._thread: threading.Thread | None = None
        self.record: RunRecord | None = None

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def is_running(self) -> bool:
        """Check if the worker is currently running."""
        return self._thread is not None and self._thread.is_alive()

    def start(self) -> None:
        """Start the run in a background thread."""
        if self.is_running:
            logger.warning("Worker already running, ignoring start request")
            return

        self._thread = threading.Thread(
            target=self._run,
            name=f"run-seed-{self._seed}",
            daemon=True,
        )
        self._thread.start()
        logger.debug("Started worker for seed %d", self._seed)

    def join(self, timeout: float | None = None) -> None:
        if self._thread is not None:
            self._thread.join(timeout)

    def cancel(self) -> None:
        """Request cancellation of the run."""
        logger.info("Cancellation requested for seed %d", self._seed)
        self._engine.cancel()

    def _run(self) -> None:
        """Execute the run in the background thread."""
        try:
            self.record = self._engine.run(
                self._config, self._seed, progress_callback=self._handle_progress
            )
        except Exception as e:
            logger.exception("Run for seed %d failed: %s", self._seed, e)
            self.record = RunRecord(
                seed=self._seed,
                config_hash=config_hash(self._config),
                version=__version__,
                status=RunStatus.FAILED,
                message=str(e),
            )
            self._report(self._on_error, self._seed, str(e))
            return
        self._report(self._on_complete, self.record)

    def _handle_progress(self, progress: TrainingProgress) -> None:
        self._report(self._on_progress, self._seed, progress)

    @staticmethod
    def _report(callback: Callable[..., None] | None, *args: object) -> None:
        if callback is None:
            return
        try:
            callback(*args)
        except Exception as e:
            logger.exception("Error in worker callback: %s", e)


def run_seeds(
    config: ExperimentConfig,
    max_workers: int | None = None,
    on_progress: Callable[[int, TrainingProgress], None] | None = None,
) -> list[RunRecord]:
    """Run every configured seed, at most ``max_workers`` at a time.

    Returns:
        Run records in the order of ``config.seeds``.
    """
    limit = max(1, max_workers if max_workers is not None else config.max_workers)
    pending = list(config.seeds)
    active: list[RunWorker] = []
    finished: dict[int, RunRecord] = {}

    while pending or active:
        while pending and len(active) < limit:
            worker = RunWorker(config, pending.pop(0), on_progress=on_progress)
            worker.start()
            active.append(worker)
        oldest = active.pop(0)
        oldest.join()
        if oldest.record is not None:
            finished[oldest.seed] = oldest.record

    return [finished[s] for s in config.seeds if s in finished]
