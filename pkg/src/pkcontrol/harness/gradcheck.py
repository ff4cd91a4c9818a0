"""Finite-difference verification of every analytic derivative in the pipeline.

Each stage compares an analytic derivative with a central finite difference
and records the worst error. Errors are measured as
``max|analytic - numeric| / max(max|numeric|, floor)``.
"""

from __future__ import annotations

from collections.abc import Callable, Iterator
from dataclasses import dataclass, field

import numpy as np

from pkcontrol.core.dynamics import PartialModel, eval_f, linearize, make_model
from pkcontrol.core.errors import NotStabilizableError
from pkcontrol.core.models import EnvSpec, FloatArray, Setpoint
from pkcontrol.core.riccati import (
    DareProblem,
    dare_jacobians,
    dare_jacobians_fd,
    dare_jacobians_printed_z3,
    solve_dare,
)
from pkcontrol.envs.base import ENVIRONMENTS
from pkcontrol.envs.tracking import TrackingEnv
from pkcontrol.policy.controller import LqrHead
from pkcontrol.policy.mlp import MlpParams, mlp_forward, mlp_jacobian
from pkcontrol.policy.policies import Policy
from pkcontrol.utils.logging import get_logger

logger = get_logger(__name__)

ERROR_FLOOR = 1e-7
DARE_TOLERANCE = 1e-5
LINEARIZATION_TOLERANCE = 1e-6
GAIN_TOLERANCE = 1e-4
ACTION_TOLERANCE = 1e-4
MLP_TOLERANCE = 1e-6

MODEL_NAMES = ("cartpole", "idp", "unicycle", "linear")


def relative_error(analytic: FloatArray, numeric: FloatArray, floor: float = ERROR_FLOOR) -> float:
    diff = float(np.max(np.abs(np.asarray(analytic) - np.asarray(numeric)), initial=0.0))
    scale = max(float(np.max(np.abs(numeric), initial=0.0)), floor)
    return diff / scale


def central_difference(
    fn: Callable[[FloatArray], FloatArray], x: FloatArray, step: float = 1e-6
) -> FloatArray:
    """Jacobian of ``fn`` at ``x`` by central differences; one column per entry of x."""
    x = np.asarray(x, dtype=np.float64)
    cols = []
    for j in range(x.size):
        h = step * (1.0 + abs(x[j]))
        plus, minus = x.copy(), x.copy()
        plus[j] += h
        minus[j] -= h
        cols.append((np.ravel(fn(plus)) - np.ravel(fn(minus))) / (2.0 * h))
    return np.stack(cols, axis=-1)


@dataclass
class StageResult:
    name: str
    tolerance: float
    max_error: float = 0.0
    cases: int = 0
    informational: bool = False
    notes: list[str] = field(default_factory=list)

    def add(self, error: float) -> None:
        self.cases += 1
        self.max_error = max(self.max_error, error)

    @property
    def passed(self) -> bool:
        return self.informational or (self.cases > 0 and self.max_error <= self.tolerance)


@dataclass
class GradcheckReport:
    seed: int
    stages: list[StageResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.stages)

    def stage(self, name: str) -> StageResult:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)

    def format(self) -> str:
        lines = [f"gradcheck (seed {self.seed})"]
        for s in self.stages:
            status = "info" if s.informational else ("PASS" if s.passed else "FAIL")
            lines.append(
                f"  {s.name:<20} {status:<5} max rel err {s.max_error:.3e} "
                f"(tol {s.tolerance:.0e}, {s.cases} cases)"
            )
            lines.extend(f"    {note}" for note in s.notes)
        lines.append("PASSED" if self.passed else "FAILED")
        return "\n".join(lines)


def random_dare_problem(rng: np.random.Generator, n: int, m: int) -> DareProblem:
    """Random (generically stabilizable) problem with positive definite weights."""
    a = rng.normal(size=(n, n)) / np.sqrt(n)
    b = rng.normal(size=(n, m))
    mq = rng.normal(size=(n, n))
    mr = rng.normal(size=(m, m))
    return DareProblem(a, b, mq @ mq.T + 0.5 * np.eye(n), mr @ mr.T + 0.5 * np.eye(m))


def random_systems(rng: np.random.Generator, count: int) -> Iterator[DareProblem]:
    produced = 0
    while produced < count:
        prob = random_dare_problem(rng, int(rng.integers(1, 6)), int(rng.integers(1, 4)))
        try:
            solve_dare(prob)
        except NotStabilizableError:
            continue
        produced += 1
        yield prob


def regulation_setpoint(model: PartialModel) -> Setpoint:
    """Operating point at which each built-in model's linearization is stabilizable."""
    if model.name == "unicycle":
        ref = TrackingEnv().reference_for_progress(0.3)
        return Setpoint(ref.x_d, ref.u_d)
    return Setpoint(np.zeros(model.state_dim), np.zeros(model.control_dim))


def _tau_for(model: PartialModel) -> float:
    for cls in ENVIRONMENTS.values():
        if cls.model_name == model.name:
            return cls.dt
    return 0.05


def check_dare(report: GradcheckReport, rng: np.random.Generator, systems: int) -> None:
    stage = StageResult("dare_jacobians", DARE_TOLERANCE)
    printed = StageResult("printed_z3", DARE_TOLERANCE, informational=True)
    for prob in random_systems(rng, systems):
        sol = solve_dare(prob)
        analytic = dare_jacobians(prob, sol)
        numeric = dare_jacobians_fd(prob)
        stage.add(
            max(
                relative_error(analytic.dp_da, numeric.dp_da),
                relative_error(analytic.dp_db, numeric.dp_db),
            )
        )
        printed.add(relative_error(dare_jacobians_printed_z3(prob, sol).dp_db, numeric.dp_db))
    printed.notes.append("dP/dB with the Z3 bracket as printed (gain term only)")
    report.stages.extend([stage, printed])


def check_linearization(report: GradcheckReport, rng: np.random.Generator, points: int) -> None:
    lin_stage = StageResult("linearization", LINEARIZATION_TOLERANCE)
    psi_stage = StageResult("param_jacobians", LINEARIZATION_TOLERANCE)
    for name in MODEL_NAMES:
        model = make_model(name)
        n, m = model.state_dim, model.control_dim
        for _ in range(points):
            x = 0.3 * rng.normal(size=n)
            u = 0.3 * rng.normal(size=m)
            sp = Setpoint(x, u)
            lin = linearize(model, sp, tau=1.0)
            xu = np.concatenate([x, u])
            fd = central_difference(lambda z: eval_f(model, z[:n], z[n:]), xu)
            lin_stage.add(relative_error(np.hstack([lin.a, lin.b]), fd))

            def ab(psi: FloatArray, sp: Setpoint = sp) -> FloatArray:
                other = linearize(model.with_psi(psi), sp, tau=1.0, with_param_jacobians=False)
                return np.concatenate([other.a.ravel(), other.b.ravel()])

            fd_psi = central_difference(ab, model.psi.values)
            analytic = np.stack(
                [
                    np.concatenate([lin.da_dpsi[j].ravel(), lin.db_dpsi[j].ravel()])
                    for j in range(len(model.psi))
                ],
                axis=-1,
            )
            psi_stage.add(relative_error(analytic, fd_psi))
    report.stages.extend([lin_stage, psi_stage])


def _head_for(model: PartialModel, rng: np.random.Generator) -> LqrHead:
    n, m = model.state_dim, model.control_dim
    q = np.diag(rng.uniform(0.5, 2.0, size=n))
    r = np.diag(rng.uniform(0.5, 2.0, size=m))
    return LqrHead(model, q, r, tau=_tau_for(model), memo_size=4)


def check_gain(report: GradcheckReport, rng: np.random.Generator) -> None:
    stage = StageResult("gain_derivative", GAIN_TOLERANCE)
    for name in MODEL_NAMES:
        model = make_model(name)
        head = _head_for(model, rng)
        sp = regulation_setpoint(model)
        cache, _ = head.refresh(sp)
        analytic = np.stack([dk.ravel() for dk in cache.dk_dpsi], axis=-1)

        def gain(psi: FloatArray, head: LqrHead = head, sp: Setpoint = sp) -> FloatArray:
            head.set_psi(psi)
            return head.refresh(sp)[0].k

        base = head.psi
        fd = central_difference(gain, base)
        head.set_psi(base)
        stage.add(relative_error(analytic, fd))
    report.stages.append(stage)


def _wide_spec(model: PartialModel, dt: float) -> EnvSpec:
    m = model.control_dim
    return EnvSpec.from_bounds(model.state_dim, np.full(m, -1e9), np.full(m, 1e9), dt, 1)


def check_actions(
    report: GradcheckReport, rng: np.random.Generator, policies: int, states: int
) -> None:
    psi_stage = StageResult("action_psi", ACTION_TOLERANCE)
    mlp_stage = StageResult("action_network", ACTION_TOLERANCE)
    for name in MODEL_NAMES:
        model = make_model(name)
        sp = regulation_setpoint(model)
        n = model.state_dim
        for _ in range(policies):
            head = _head_for(model, rng)
            spec = _wide_spec(model, head.tau)
            net = MlpParams.init((n, 8, model.control_dim), rng, zero_output=False)
            policy = Policy(spec, net, head=head)
            for _ in range(states):
                obs = sp.x_d + 0.2 * rng.normal(size=n)
                grads = policy.act(obs, sp)

                def by_psi(psi: FloatArray, obs: FloatArray = obs) -> FloatArray:
                    policy.set_psi(psi)
                    return policy.mean_action(obs, sp)

                base = policy.psi
                fd = central_difference(by_psi, base)
                policy.set_psi(base)
                psi_stage.add(relative_error(grads.du_dpsi, fd))

                flat = net.flatten()
                cols = rng.choice(flat.size, size=min(12, flat.size), replace=False)

                def by_params(sub: FloatArray, obs: FloatArray = obs) -> FloatArray:
                    full = flat.copy()
                    full[cols] = sub
                    net.assign(full)
                    return policy.mean_action(obs, sp)

                fd_net = central_difference(by_params, flat[cols])
                net.assign(flat)
                mlp_stage.add(relative_error(grads.du_dmlp[:, cols], fd_net))
    report.stages.extend([psi_stage, mlp_stage])


def check_mlp(report: GradcheckReport, rng: np.random.Generator, networks: int) -> None:
    stage = StageResult("mlp_backprop", MLP_TOLERANCE)
    for _ in range(networks):
        sizes = (int(rng.integers(1, 6)), int(rng.integers(2, 9)), int(rng.integers(1, 4)))
        net = MlpParams.init(sizes, rng, zero_output=False)
        x = rng.normal(size=sizes[0])
        flat = net.flatten()

        def out(params: FloatArray, net: MlpParams = net, x: FloatArray = x) -> FloatArray:
            net.assign(params)
            return mlp_forward(net, x)[0]

        fd = central_difference(out, flat)
        net.assign(flat)
        stage.add(relative_error(mlp_jacobian(net, x), fd))
    report.stages.append(stage)


def run_gradcheck(
    seed: int = 0,
    systems: int = 50,
    points: int = 5,
    policies: int = 5,
    states: int = 20,
    networks: int = 10,
) -> GradcheckReport:
    """Run every stage with one seeded generator and collect the report."""
    rng = np.random.default_rng(seed)
    report = GradcheckReport(seed=seed)
    check_dare(report, rng, systems)
    check_linearization(report, rng, points)
    check_gain(report, rng)
    check_actions(report, rng, policies, states)
    check_mlp(report, rng, networks)
    for s in report.stages:
        logger.debug("gradcheck stage %s: %.3e over %d cases", s.name, s.max_error, s.cases)
    return report
