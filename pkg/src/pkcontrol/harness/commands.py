"""Command operations behind the CLI subcommands.

Each ``cmd_*`` function takes plain arguments, does the work and returns a
result object; printing and exit codes belong to :mod:`pkcontrol.cli`.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

from pkcontrol.core.errors import InvalidParameterError
from pkcontrol.harness.gradcheck import GradcheckReport, run_gradcheck
from pkcontrol.harness.lqr_compare import LqrRow, lqr_table
from pkcontrol.harness.plotdata import (
    action_variation,
    export_plotdata,
    write_action_trace,
    write_summary,
    write_trajectory_csv,
)
from pkcontrol.harness.runner import load_policy
from pkcontrol.harness.workers import run_seeds
from pkcontrol.rl.evaluation import evaluate_policy
from pkcontrol.utils.config import ConfigManager, ExperimentConfig, config_hash, with_overrides
from pkcontrol.utils.history import RunHistory, RunRecord
from pkcontrol.utils.logging import get_logger

logger = get_logger(__name__)

CONFIG_COPY = "config.json"


def load_config(
    config_path: Path,
    out: Path | None = None,
    seed: int | None = None,
    preset: str | None = None,
) -> ExperimentConfig:
    """Load a configuration file and apply command-line overrides."""
    config = with_overrides(ConfigManager(config_path).load(), out, seed, preset)
    logger.debug("Configuration hash %s", config_hash(config))
    return config


def cmd_train(config: ExperimentConfig) -> list[RunRecord]:
    """Train every seed, then write the summary and append to the run history."""
    config.output_dir.mkdir(parents=True, exist_ok=True)
    ConfigManager(config.output_dir / CONFIG_COPY).save(config)
    records = run_seeds(config)
    write_summary(config.output_dir, records)

    history = RunHistory.for_output_dir(config.output_dir)
    for record in records:
        history.add_record(record)
    history.save()
    return records


@dataclass(frozen=True)
class EvalRow:
    preset: str
    episodes: int
    mean_return: float
    std_return: float
    action_variation: float

    @property
    def accumulated_cost(self) -> float:
        return -self.mean_return


def cmd_eval(
    checkpoint_path: Path,
    episodes: int = 1,
    presets: Sequence[str] | None = None,
    seed: int = 0,
    out: Path | None = None,
) -> list[EvalRow]:
    """Evaluate a checkpoint from each preset (or the reset distribution).

    Tracking checkpoints also get trajectory and action-trace CSVs under
    ``out`` (default: ``<checkpoint dir>/eval``).

    Raises:
        InvalidParameterError: If ``episodes`` is not positive.
        CheckpointError: If the checkpoint cannot be loaded.
    """
    if episodes < 1:
        raise InvalidParameterError(f"episodes must be positive, got {episodes}")
    config, env, policy = load_policy(checkpoint_path)
    out_dir = out if out is not None else checkpoint_path.parent / "eval"
    labels: list[str | None] = list(presets) if presets else [None]
    rows: list[EvalRow] = []
    for preset in labels:
        result = evaluate_policy(env, policy, episodes, seed, preset)
        first = result.trajectories[0]
        label = preset or "default"
        rows.append(
            EvalRow(
                preset=label,
                episodes=episodes,
                mean_return=result.mean_return,
                std_return=result.std_return,
                action_variation=action_variation(first.actions),
            )
        )
        if config.task == "tracking":
            write_trajectory_csv(out_dir / f"trajectory_{label}.csv", first)
            write_action_trace(out_dir / f"actions_{label}.csv", first)
    return rows


def format_eval(rows: Sequence[EvalRow]) -> str:
    lines = [f"{'preset':<12} {'episodes':>8} {'mean return':>14} {'std':>10} {'cost':>14}"]
    for r in rows:
        lines.append(
            f"{r.preset:<12} {r.episodes:>8} {r.mean_return:>14.3f} {r.std_return:>10.3f} "
            f"{r.accumulated_cost:>14.3f}"
        )
    return "\n".join(lines)


def cmd_lqr(
    config: ExperimentConfig,
    presets: Sequence[str] | None = None,
    psi_source: str = "true",
    seed: int = 0,
) -> list[LqrRow]:
    return lqr_table(config, presets, psi_source, seed)


def cmd_gradcheck(seed: int = 0, systems: int = 50) -> GradcheckReport:
    return run_gradcheck(seed=seed, systems=systems)


def cmd_plotdata(run_dir: Path, presets: Sequence[str] | None = None) -> list[Path]:
    """Export plot data for a training output directory.

    Raises:
        InvalidParameterError: If the directory holds no training logs.
    """
    return export_plotdata(run_dir, presets)
