"""Experiment orchestration: seeded runs, LQR tables, gradient checks and plot data."""

from pkcontrol.harness.gradcheck import GradcheckReport, run_gradcheck
from pkcontrol.harness.lqr_compare import LqrController, LqrRow, lqr_table
from pkcontrol.harness.runner import RunEngine, load_policy
from pkcontrol.harness.workers import RunWorker, run_seeds

__all__: list[str] = [
    "GradcheckReport",
    "LqrController",
    "LqrRow",
    "RunEngine",
    "RunWorker",
    "load_policy",
    "lqr_table",
    "run_gradcheck",
    "run_seeds",
]
