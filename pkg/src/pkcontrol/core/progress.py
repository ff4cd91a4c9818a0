"""Throughput tracking for training runs."""

from __future__ import annotations

import time

from pkcontrol.core.models import TrainingProgress


class ThroughputTracker:
    """Tracks environment-step throughput and estimates time to completion."""

    def __init__(self, window_size: int = 10) -> None:
        """Initialize tracker with rolling window for speed averaging.

        Args:
            window_size: Number of samples to use for rolling average speed calculation.
        """
        self._start_time: float | None = None
        self._samples: list[tuple[float, int]] = []  # (timestamp, env_steps)
        self._window_size = window_size
        self._total_steps = 0
        self._env_steps = 0

    def start(self, total_steps: int) -> None:
        """Start tracking progress.

        Args:
            total_steps: Environment-step budget of the run.
        """
        self._start_time = time.time()
        self._total_steps = total_steps
        self._env_steps = 0
        self._samples.clear()

    def update(self, env_steps: int) -> TrainingProgress:
        """Record the current step count and return throughput statistics.

        Args:
            env_steps: Environment steps taken so far.

        Returns:
            TrainingProgress with current and average steps/second, ETA and elapsed time.
        """
        current_time = time.time()
        self._env_steps = env_steps

        self._samples.append((current_time, env_steps))
        if len(self._samples) > self._window_size:
            self._samples = self._samples[-self._window_size :]

        elapsed_seconds = 0
        if self._start_time is not None:
            elapsed_seconds = int(current_time - self._start_time)

        current_rate = 0.0
        if len(self._samples) >= 2:
            (t0, s0), (t1, s1) = self._samples[-2], self._samples[-1]
            if t1 > t0:
                current_rate = (s1 - s0) / (t1 - t0)

        average_rate = 0.0
        if len(self._samples) >= 2:
            (t0, s0), (t1, s1) = self._samples[0], self._samples[-1]
            if t1 > t0:
                average_rate = (s1 - s0) / (t1 - t0)

        eta_seconds = 0
        remaining = self._total_steps - self._env_steps
        if average_rate > 0 and remaining > 0:
            eta_seconds = int(remaining / average_rate)

        return TrainingProgress(
            env_steps=env_steps,
            current_steps_per_second=max(0.0, current_rate),
            average_steps_per_second=max(0.0, average_rate),
            eta_seconds=max(0, eta_seconds),
            elapsed_seconds=max(0, elapsed_seconds),
        )

    def reset(self) -> None:
        """Reset tracker state."""
        self._start_time = None
        self._samples.clear()
        self._total_steps = 0
        self._env_steps = 0
