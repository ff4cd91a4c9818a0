"""Unit tests for plot-data export.

Tests for:
- Learning-curve aggregation across seeds
- Summary files
- Trajectory and action CSVs
"""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from pkcontrol.core.errors import InvalidParameterError
from pkcontrol.core.models import RunStatus
from pkcontrol.harness.plotdata import (
    SUMMARY_CSV,
    SUMMARY_JSON,
    action_variation,
    aggregate_curves,
    seed_logs,
    write_action_trace,
    write_summary,
    write_trajectory_csv,
)
from pkcontrol.harness.runner import LOG_FILE
from pkcontrol.rl.evaluation import LogRow, TrainingLog, Trajectory
from pkcontrol.utils.history import EvalPoint, RunRecord


def _write_log(path: Path, returns: dict[int, float]) -> Path:
    log = TrainingLog(path, num_psi=2)
    for step, value in returns.items():
        log.append(LogRow(step, 0, value, 0.0, 0.0, 0.0, (1.0, 0.5), 0))
    return path


def _trajectory() -> Trajectory:
    return Trajectory(
        states=[np.array([1.0, 0.0]), np.array([0.5, 0.1]), np.array([0.2, 0.0])],
        actions=[np.array([-1.0]), np.array([-0.25])],
        rewards=[-1.0, -0.3],
        references=[np.zeros(2), np.zeros(2)],
    )


class TestAggregateCurves:
    """Tests for seed_logs and aggregate_curves."""

    def test_mean_and_std_per_step(self, tmp_path: Path) -> None:
        """Steps should be averaged with the population deviation."""
        first = _write_log(tmp_path / "a.csv", {0: -10.0, 100: -4.0})
        second = _write_log(tmp_path / "b.csv", {0: -6.0, 100: -2.0})

        curve = aggregate_curves([first, second])

        assert [p.env_steps for p in curve] == [0, 100]
        assert curve[0].mean == pytest.approx(-8.0)
        assert curve[0].std == pytest.approx(2.0)
        assert curve[1].mean_plus_std == pytest.approx(-2.0)
        assert curve[1].runs == 2

    def test_shorter_runs_lower_the_count(self, tmp_path: Path) -> None:
        """A run that stopped early only counts where it logged."""
        full = _write_log(tmp_path / "a.csv", {0: -1.0, 100: -1.0})
        short = _write_log(tmp_path / "b.csv", {0: -3.0})

        curve = aggregate_curves([full, short])

        assert [p.runs for p in curve] == [2, 1]
        assert curve[1].mean == -1.0

    def test_seed_logs_keyed_by_seed(self, tmp_path: Path) -> None:
        """Logs under seed_<s> directories should be found in seed order."""
        for seed in (10, 2):
            _write_log(tmp_path / f"seed_{seed}" / LOG_FILE, {0: 0.0})
        (tmp_path / "seed_x").mkdir()

        assert list(seed_logs(tmp_path)) == [2, 10]

    def test_seed_logs_empty_raises(self, tmp_path: Path) -> None:
        """A directory without logs cannot be exported."""
        with pytest.raises(InvalidParameterError, match="no training logs"):
            seed_logs(tmp_path)


class TestWriteSummary:
    """Tests for write_summary."""

    def test_summary_files(self, tmp_path: Path) -> None:
        """Both summary files should be written without wall-clock times."""
        log = _write_log(tmp_path / "seed_0" / LOG_FILE, {0: -5.0, 50: -1.0})
        records = [
            RunRecord(
                seed=0,
                config_hash="abc",
                version="1.0.0",
                status=RunStatus.COMPLETED,
                eval_points=[EvalPoint(0, -5.0, 0.0), EvalPoint(50, -1.0, 0.0)],
                log_path=log.as_posix(),
                wall_clock_seconds=12.5,
            ),
            RunRecord(
                seed=1,
                config_hash="abc",
                version="1.0.0",
                status=RunStatus.DIVERGED,
                message="ψ left the guard band",
            ),
        ]

        csv_path, json_path = write_summary(tmp_path, records)

        assert csv_path == tmp_path / SUMMARY_CSV
        text = json_path.read_text(encoding="utf-8")
        assert "wall_clock" not in text
        document = json.loads(text)
        assert json_path.name == SUMMARY_JSON
        assert document["config_hash"] == "abc"
        assert document["runs"][0]["final_mean_return"] == -1.0
        assert document["divergences"] == {"1": "ψ left the guard band"}
        with csv_path.open(encoding="utf-8") as f:
            assert len(list(csv.reader(f))) == 3


class TestTrajectoryFiles:
    """Tests for per-episode CSVs."""

    def test_trajectory_header_and_rows(self, tmp_path: Path) -> None:
        """Trajectory CSVs carry state, action, reward and reference columns."""
        path = write_trajectory_csv(tmp_path / "traj.csv", _trajectory())

        with path.open(encoding="utf-8") as f:
            rows = list(csv.reader(f))

        assert rows[0] == ["t", "state_0", "state_1", "action_0", "reward", "ref_0", "ref_1"]
        assert len(rows) == 3
        assert float(rows[2][3]) == -0.25

    def test_action_trace(self, tmp_path: Path) -> None:
        """Action traces list one row per step."""
        path = write_action_trace(tmp_path / "actions.csv", _trajectory())

        with path.open(encoding="utf-8") as f:
            rows = list(csv.reader(f))

        assert rows == [["t", "action_0"], ["0", "-1.0"], ["1", "-0.25"]]


class TestActionVariation:
    def test_constant_steps_have_no_variation(self) -> None:
        """Evenly changing actions have zero variance of differences."""
        actions = [np.array([float(t)]) for t in range(5)]
        assert action_variation(actions) == 0.0

    def test_alternating_actions(self) -> None:
        """Bang-bang actions give the largest variation."""
        actions = [np.array([1.0]), np.array([-1.0]), np.array([1.0]), np.array([-1.0])]
        # differences -2, 2, -2 have variance 32/9
        assert action_variation(actions) == pytest.approx(32.0 / 9.0)

    def test_short_sequences(self) -> None:
        """Fewer than three actions give zero."""
        assert action_variation([np.array([1.0]), np.array([5.0])]) == 0.0
