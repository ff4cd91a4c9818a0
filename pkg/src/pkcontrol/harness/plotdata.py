"""Aggregate learning curves and export plot-ready CSV files.

Curves are recomputed from the per-seed training logs; trajectories and
action traces are regenerated from the per-seed checkpoints.
"""

from __future__ import annotations

import csv
import json
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from pkcontrol.core.errors import InvalidParameterError
from pkcontrol.core.models import FloatArray
from pkcontrol.harness.runner import CHECKPOINT_FILE, LOG_FILE, load_policy
from pkcontrol.rl.evaluation import Trajectory, evaluate_policy, read_training_log
from pkcontrol.utils.history import RunRecord
from pkcontrol.utils.logging import get_logger

logger = get_logger(__name__)

SUMMARY_CSV = "summary.csv"
SUMMARY_JSON = "summary.json"
PLOTDATA_DIR = "plotdata"


@dataclass(frozen=True)
class CurvePoint:
    env_steps: int
    mean: float
    std: float
    runs: int

    @property
    def mean_minus_std(self) -> float:
        return self.mean - self.std

    @property
    def mean_plus_std(self) -> float:
        return self.mean + self.std


def seed_logs(run_dir: Path) -> dict[int, Path]:
    """Training logs found under ``run_dir``, keyed by seed.

    Raises:
        InvalidParameterError: If no training log exists.
    """
    logs: dict[int, Path] = {}
    for path in sorted(run_dir.glob(f"seed_*/{LOG_FILE}")):
        suffix = path.parent.name.removeprefix("seed_")
        if suffix.lstrip("-").isdigit():
            logs[int(suffix)] = path
    if not logs:
        raise InvalidParameterError(f"no training logs under {run_dir}")
    return dict(sorted(logs.items()))


def aggregate_curves(logs: Iterable[Path]) -> list[CurvePoint]:
    """Mean and population standard deviation of evaluation returns per step.

    A step is aggregated over every run that logged it, so runs stopped early
    by divergence lower the ``runs`` count rather than the mean.
    """
    by_step: dict[int, list[float]] = {}
    for path in logs:
        for row in read_training_log(path):
            by_step.setdefault(int(row["env_steps"]), []).append(row["mean_eval_return"])
    return [
        CurvePoint(step, float(np.mean(values)), float(np.std(values)), len(values))
        for step, values in sorted(by_step.items())
    ]


def write_curves(path: Path, curve: Sequence[CurvePoint]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["env_steps", "mean", "std", "mean_minus_std", "mean_plus_std", "runs"])
        for p in curve:
            writer.writerow(
                [
                    p.env_steps,
                    repr(p.mean),
                    repr(p.std),
                    repr(p.mean_minus_std),
                    repr(p.mean_plus_std),
                    p.runs,
                ]
            )
    return path


def write_summary(output_dir: Path, records: Sequence[RunRecord]) -> tuple[Path, Path]:
    """Write ``summary.csv`` (aggregate curve) and ``summary.json`` (records).

    Wall-clock durations are left out of the JSON summary so reruns with the
    same configuration produce identical files.
    """
    logs = [Path(r.log_path) for r in records if r.log_path]
    curve = aggregate_curves(logs) if logs else []
    csv_path = write_curves(output_dir / SUMMARY_CSV, curve)
    document = {
        "config_hash": records[0].config_hash if records else None,
        "runs": [
            {
                "seed": r.seed,
                "status": r.status.value,
                "final_mean_return": r.final_mean_return,
                "eval_points": [asdict(p) for p in r.eval_points],
                "checkpoint_path": r.checkpoint_path,
                "message": r.message,
            }
            for r in records
        ],
        "divergences": {str(r.seed): r.message for r in records if r.message},
    }
    json_path = output_dir / SUMMARY_JSON
    with json_path.open("w", encoding="utf-8") as f:
        json.dump(document, f, indent=2, ensure_ascii=False)
        f.write("\n")
    return csv_path, json_path


def write_trajectory_csv(path: Path, traj: Trajectory) -> Path:
    """Columns ``t, state_*, action_*, reward, ref_*``; one row per step."""
    n = len(traj.states[0])
    m = len(traj.actions[0]) if traj.actions else 0
    header = [
        "t",
        *(f"state_{i}" for i in range(n)),
        *(f"action_{i}" for i in range(m)),
        "reward",
        *(f"ref_{i}" for i in range(n)),
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for t in range(len(traj)):
            writer.writerow(
                [
                    t,
                    *(repr(float(v)) for v in traj.states[t]),
                    *(repr(float(v)) for v in traj.actions[t]),
                    repr(float(traj.rewards[t])),
                    *(repr(float(v)) for v in traj.references[t]),
                ]
            )
    return path


def write_action_trace(path: Path, traj: Trajectory) -> Path:
    """Columns ``t, action_0..action_{m-1}``."""
    m = len(traj.actions[0]) if traj.actions else 0
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["t", *(f"action_{i}" for i in range(m))])
        for t, action in enumerate(traj.actions):
            writer.writerow([t, *(repr(float(v)) for v in action)])
    return path


def action_variation(actions: Sequence[FloatArray]) -> float:
    """Mean per-dimension variance of step-to-step action changes."""
    arr = np.asarray(actions, dtype=np.float64)
    if arr.shape[0] < 3:
        return 0.0
    return float(np.mean(np.var(np.diff(arr, axis=0), axis=0)))


def export_plotdata(
    run_dir: Path, presets: Sequence[str] | None = None, seed: int = 0
) -> list[Path]:
    """Write the learning curve plus per-seed trajectory and action CSVs.

    Returns:
        Every file written, all under ``run_dir / "plotdata"``.

    Raises:
        InvalidParameterError: If ``run_dir`` holds no training logs.
    """
    logs = seed_logs(run_dir)
    out = run_dir / PLOTDATA_DIR
    written = [write_curves(out / "curves.csv", aggregate_curves(logs.values()))]
    for run_seed, log_path in logs.items():
        checkpoint = log_path.parent / CHECKPOINT_FILE
        if not checkpoint.exists():
            logger.warning("No checkpoint for seed %d, skipping trajectories", run_seed)
            continue
        _, env, policy = load_policy(checkpoint)
        labels: list[str | None] = list(presets) if presets else [None]
        for preset in labels:
            label = preset or "default"
            traj = evaluate_policy(env, policy, 1, seed, preset).trajectories[0]
            written.append(
                write_trajectory_csv(out / f"trajectory_seed{run_seed}_{label}.csv", traj)
            )
            written.append(write_action_trace(out / f"actions_seed{run_seed}_{label}.csv", traj))
    logger.info("Wrote %d plot-data files to %s", len(written), out)
    return written
