"""Unit tests for the pure LQR comparison.

Tests for:
- Per-preset LQR tables and failure rows
- Table formatting
- Gains from the true and the configured parameters
"""

from pathlib import Path

import numpy as np
import pytest
from pytest_mock import MockerFixture

from pkcontrol.core.errors import InvalidParameterError, NotStabilizableError
from pkcontrol.core.riccati import DareProblem, solve_dare
from pkcontrol.harness.lqr_compare import LqrRow, format_table, gain_matrix, lqr_table
from tests.conftest import small_config


def _scalar_gain(a: float, b: float) -> np.ndarray:
    one = np.eye(1)
    return solve_dare(DareProblem(np.array([[a]]), np.array([[b]]), one, one)).k


class TestLqrTable:
    """Tests for lqr_table."""

    def test_linear_task_row(self, tmp_path: Path) -> None:
        """The linear task should run a full episode from its preset."""
        rows = lqr_table(small_config(tmp_path))

        assert [row.preset for row in rows] == ["unit"]
        assert rows[0].ok
        assert rows[0].steps == 20
        assert rows[0].total_reward is not None and rows[0].total_reward < 0.0

    def test_upright_rest_costs_nothing(self, tmp_path: Path) -> None:
        """Balancing the double pendulum from rest should collect zero reward."""
        config = small_config(tmp_path, task="idp")
        config.env.max_steps = 50

        rows = lqr_table(config, presets=["upright"])

        assert rows[0].ok
        assert rows[0].total_reward == pytest.approx(0.0, abs=1e-12)

    def test_solver_failure_becomes_error_row(
        self, tmp_path: Path, mocker: MockerFixture
    ) -> None:
        """A failed DARE should yield an error row instead of raising."""
        mocker.patch(
            "pkcontrol.harness.lqr_compare.solve_dare",
            side_effect=NotStabilizableError("pair (A, B) is not stabilizable"),
        )

        rows = lqr_table(small_config(tmp_path))

        assert not rows[0].ok
        assert rows[0].total_reward is None
        assert "stabilizable" in (rows[0].error or "")

    def test_unknown_preset_raises(self, tmp_path: Path) -> None:
        """Presets the task does not define should be rejected."""
        with pytest.raises(InvalidParameterError, match="unknown preset"):
            lqr_table(small_config(tmp_path), presets=["hard-9"])

    def test_unknown_psi_source_raises(self, tmp_path: Path) -> None:
        """Only the true and the configured parameters are valid sources."""
        with pytest.raises(InvalidParameterError, match="psi source"):
            lqr_table(small_config(tmp_path), psi_source="learned")


class TestFormatTable:
    def test_failed_rows_show_error(self) -> None:
        """Failed rows print n/a and the error underneath."""
        rows = [
            LqrRow("upright", "true", -1.5, 100),
            LqrRow("hard-1", "true", None, 0, error="not stabilizable"),
        ]

        text = format_table(rows, title="LQR")

        lines = text.splitlines()
        assert "LQR return" in lines[0]
        assert "-1.50" in lines[1]
        assert "n/a" in lines[2]
        assert lines[3] == "  ! not stabilizable"


class TestGainMatrix:
    """Tests for gain_matrix."""

    def test_true_parameters(self, tmp_path: Path) -> None:
        """The true source should use the plant's own (a, b)."""
        gain = gain_matrix(small_config(tmp_path), "true")

        np.testing.assert_allclose(gain, _scalar_gain(1.05, 0.5), atol=1e-10)

    def test_configured_parameters(self, tmp_path: Path) -> None:
        """The config source should use the initial parameter guess."""
        gain = gain_matrix(small_config(tmp_path), "config")

        np.testing.assert_allclose(gain, _scalar_gain(0.9, 0.8), atol=1e-10)
