"""Partially known parametric dynamics models.

A :class:`PartialModel` couples a model structure (the evaluator, with known
constants baked in) with a vector ψ of unknown, trainable parameters. Only ψ
and the evaluation point are ever dual-active, so derivatives never flow into
the known constants.

Built-in models: the cart-pole and the inverted double pendulum from their
Lagrangian equations of motion, a unicycle with unknown actuator gains for
path tracking, and a scalar linear toy system.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from pkcontrol.core import dual
from pkcontrol.core.dual import Scalar
from pkcontrol.core.errors import InvalidParameterError
from pkcontrol.core.models import FloatArray, Setpoint, TimeKind

Evaluator = Callable[
    [Sequence[Scalar], Sequence[Scalar], Sequence[Scalar], Mapping[str, float]],
    list[Scalar],
]


@dataclass(frozen=True, eq=False)
class ParamVector:
    """Named vector of unknown parameters ψ. Every entry is trainable."""

    names: tuple[str, ...]
    values: FloatArray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if len(set(self.names)) != len(self.names):
            raise InvalidParameterError(f"parameter names must be unique: {self.names}")
        if values.shape != (len(self.names),):
            raise InvalidParameterError(
                f"{len(self.names)} names but {values.size} parameter values"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError("parameter values must be finite")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.names)

    @property
    def trainable(self) -> tuple[bool, ...]:
        return (True,) * len(self.names)

    def with_values(self, values: Sequence[float] | FloatArray) -> ParamVector:
        return ParamVector(self.names, np.asarray(values, dtype=np.float64))

    def as_dict(self) -> dict[str, float]:
        return {name: float(v) for name, v in zip(self.names, self.values, strict=True)}


@dataclass(frozen=True, eq=False)
class PartialModel:
    """Parametric dynamics f_app(x, u; ψ) with fixed known constants."""

    name: str
    state_dim: int
    control_dim: int
    time_kind: TimeKind
    known_constants: Mapping[str, float]
    psi: ParamVector
    evaluator: Evaluator
    state_names: tuple[str, ...] = field(default=())
    control_names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "known_constants", MappingProxyType(dict(self.known_constants))
        )

    def with_psi(self, values: Sequence[float] | FloatArray) -> PartialModel:
        """Copy of this model with different ψ values."""
        return dataclasses.replace(self, psi=self.psi.with_values(values))

    def evaluate(
        self, x: Sequence[Scalar], u: Sequence[Scalar], psi: Sequence[Scalar]
    ) -> list[Scalar]:
        out = self.evaluator(x, u, psi, self.known_constants)
        if len(out) != self.state_dim:
            raise InvalidParameterError(
                f"{self.name} evaluator returned {len(out)} values, expected {self.state_dim}"
            )
        return out


@dataclass(frozen=True, eq=False)
class LinearizedSystem:
    """Linearization and discretization of a model about a setpoint.

    ``da_dpsi`` and ``db_dpsi`` hold one matrix per ψ entry: the derivative of
    the (undiscretized) ``a`` and ``b`` with respect to that entry.
    """

    a: FloatArray
    b: FloatArray
    a_dis: FloatArray
    b_dis: FloatArray
    tau: float
    time_kind: TimeKind
    da_dpsi: tuple[FloatArray, ...]
    db_dpsi: tuple[FloatArray, ...]

    def da_dis_dpsi(self, j: int) -> FloatArray:
        if self.time_kind is TimeKind.CONTINUOUS:
            return self.tau * self.da_dpsi[j]
        return self.da_dpsi[j]

    def db_dis_dpsi(self, j: int) -> FloatArray:
        if self.time_kind is TimeKind.CONTINUOUS:
            return self.tau * self.db_dpsi[j]
        return self.db_dpsi[j]


def _check_point(model: PartialModel, x: FloatArray, u: FloatArray) -> None:
    if x.shape != (model.state_dim,) or u.shape != (model.control_dim,):
        raise InvalidParameterError(
            f"{model.name} expects state ({model.state_dim},) and control "
            f"({model.control_dim},), got {x.shape} and {u.shape}"
        )


def eval_f(model: PartialModel, x: FloatArray, u: FloatArray) -> FloatArray:
    """Evaluate f_app at real arguments.

    Returns the state derivative for continuous-time models and the next
    state for discrete-time models.

    Raises:
        InvalidParameterError: On dimension mismatch or non-finite output.
        SingularMatrixError: If a mass matrix is singular.
    """
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    _check_point(model, x, u)
    out = np.array(
        model.evaluate([float(v) for v in x], [float(v) for v in u], model.psi.values.tolist()),
        dtype=np.float64,
    )
    if not np.all(np.isfinite(out)):
        raise InvalidParameterError(f"{model.name} produced non-finite output")
    return out


def _first_derivatives(model: PartialModel, sp: Setpoint) -> tuple[FloatArray, FloatArray]:
    n, m = model.state_dim, model.control_dim
    dirs = n + m
    xs = [dual.variable(float(v), i, dirs) for i, v in enumerate(sp.x_d)]
    us = [dual.variable(float(v), n + k, dirs) for k, v in enumerate(sp.u_d)]
    out = model.evaluate(xs, us, model.psi.values.tolist())
    jac = np.array([[dual.real(p) for p in dual.partials_of(y, dirs)] for y in out])
    return jac[:, :n], jac[:, n:]


def param_jacobians(
    model: PartialModel, sp: Setpoint
) -> tuple[tuple[FloatArray, ...], tuple[FloatArray, ...]]:
    """dA/dψⱼ and dB/dψⱼ at the setpoint via nested duals.

    The inner directions are the state and control coordinates, the outer
    directions the ψ entries; entry (i, k) of ``da_dpsi[j]`` is the mixed
    second derivative of output i by ψⱼ and state coordinate k.
    """
    x = np.asarray(sp.x_d, dtype=np.float64)
    u = np.asarray(sp.u_d, dtype=np.float64)
    _check_point(model, x, u)
    n, m, p = model.state_dim, model.control_dim, len(model.psi)
    inner = n + m
    xs = [dual.nested_variable(float(v), i, inner, None, p) for i, v in enumerate(x)]
    us = [dual.nested_variable(float(v), n + k, inner, None, p) for k, v in enumerate(u)]
    psi = [
        dual.nested_variable(float(v), None, inner, j, p) for j, v in enumerate(model.psi.values)
    ]
    out = model.evaluate(xs, us, psi)

    mixed = np.zeros((p, n, inner))
    for i, y in enumerate(out):
        for j, outer in enumerate(dual.partials_of(y, p)):
            mixed[j, i, :] = [dual.real(d) for d in dual.partials_of(outer, inner)]
    return (
        tuple(mixed[j, :, :n].copy() for j in range(p)),
        tuple(mixed[j, :, n:].copy() for j in range(p)),
    )


def linearize(
    model: PartialModel,
    sp: Setpoint,
    tau: float,
    with_param_jacobians: bool = True,
) -> LinearizedSystem:
    """Linearize about (x_d, u_d) and discretize.

    Continuous models use the Euler rule ``a_dis = tau * a + I``,
    ``b_dis = tau * b``; discrete models use the Jacobians directly.

    Raises:
        InvalidParameterError: If ``tau <= 0`` for a continuous model or the
            setpoint dimensions do not match.
    """
    if model.time_kind is TimeKind.CONTINUOUS and not tau > 0:
        raise InvalidParameterError(f"tau must be positive for continuous models, got {tau}")
    x = np.asarray(sp.x_d, dtype=np.float64)
    u = np.asarray(sp.u_d, dtype=np.float64)
    _check_point(model, x, u)
    a, b = _first_derivatives(model, sp)
    if model.time_kind is TimeKind.CONTINUOUS:
        a_dis = tau * a + np.eye(model.state_dim)
        b_dis = tau * b
    else:
        a_dis, b_dis = a.copy(), b.copy()

    if with_param_jacobians:
        da_dpsi, db_dpsi = param_jacobians(model, sp)
    else:
        da_dpsi, db_dpsi = (), ()
    return LinearizedSystem(
        a=a,
        b=b,
        a_dis=a_dis,
        b_dis=b_dis,
        tau=tau,
        time_kind=model.time_kind,
        da_dpsi=da_dpsi,
        db_dpsi=db_dpsi,
    )


# Built-in models ---------------------------------------------------------------


def _cartpole_f(
    x: Sequence[Scalar], u: Sequence[Scalar], psi: Sequence[Scalar], c: Mapping[str, float]
) -> list[Scalar]:
    _, x_dot, theta, theta_dot = x
    m_c, m_p, length = psi
    force = u[0]
    total = m_p + m_c
    sin_t, cos_t = dual.sin(theta), dual.cos(theta)
    temp = (force - m_p * length * theta_dot * theta_dot * sin_t) / total
    theta_acc = (c["gravity"] * sin_t - cos_t * temp) / (
        c["inertia_coefficient"] * (4.0 / 3.0 - m_p * cos_t * cos_t / total)
    )
    x_acc = temp - m_p * length * theta_acc * cos_t / total
    return [x_dot, x_acc, theta_dot, theta_acc]


def idp_mass_matrix(
    theta1: Scalar, theta2: Scalar, psi: Sequence[Scalar]
) -> list[list[Scalar]]:
    """Symmetric 3x3 mass matrix of the cart/double-pole system."""
    m0, m1, m2, l1, l2 = psi
    link1 = 0.5 * m1 * l1 + m2 * l1
    c12 = 0.5 * m2 * l1 * l2 * dual.cos(theta1 - theta2)
    c1 = link1 * dual.cos(theta1)
    c2 = 0.5 * m2 * l2 * dual.cos(theta2)
    return [
        [m0 + m1 + m2, c1, c2],
        [c1, 0.25 * m1 * l1 * l1 + m2 * l1 * l1 + m1 * l1 * l1 / 12.0, c12],
        [c2, c12, 0.25 * m2 * l2 * l2 + m2 * l2 * l2 / 12.0],
    ]


def _idp_f(
    x: Sequence[Scalar], u: Sequence[Scalar], psi: Sequence[Scalar], c: Mapping[str, float]
) -> list[Scalar]:
    _, x_dot, th1, th1_dot, th2, th2_dot = x
    _, m1, m2, l1, l2 = psi
    g = c["gravity"]
    force = c["gear"] * u[0]
    link1 = 0.5 * m1 * l1 + m2 * l1
    s12 = 0.5 * m2 * l1 * l2 * dual.sin(th1 - th2)
    rhs = [
        force
        + link1 * dual.sin(th1) * th1_dot * th1_dot
        + 0.5 * m2 * l2 * dual.sin(th2) * th2_dot * th2_dot,
        g * link1 * dual.sin(th1) - s12 * th2_dot * th2_dot,
        0.5 * m2 * g * l2 * dual.sin(th2) + s12 * th1_dot * th1_dot,
    ]
    x_acc, th1_acc, th2_acc = dual.solve_dense(idp_mass_matrix(th1, th2, psi), rhs)
    return [x_dot, x_acc, th1_dot, th1_acc, th2_dot, th2_acc]


def _unicycle_f(
    x: Sequence[Scalar], u: Sequence[Scalar], psi: Sequence[Scalar], c: Mapping[str, float]
) -> list[Scalar]:
    _, _, theta, v, omega = x
    gain_v, gain_omega = psi
    interval = c["control_interval"]
    return [
        v * dual.cos(theta),
        v * dual.sin(theta),
        omega,
        gain_v * u[0] / interval,
        gain_omega * u[1] / interval,
    ]


def _linear_f(
    x: Sequence[Scalar], u: Sequence[Scalar], psi: Sequence[Scalar], c: Mapping[str, float]
) -> list[Scalar]:
    a, b = psi
    return [a * x[0] + b * u[0]]


@dataclass(frozen=True)
class _ModelTemplate:
    state_names: tuple[str, ...]
    control_names: tuple[str, ...]
    psi_names: tuple[str, ...]
    true_psi: tuple[float, ...]
    constants: Mapping[str, float]
    time_kind: TimeKind
    evaluator: Evaluator
    positive_psi: bool = True


MODEL_TEMPLATES: Mapping[str, _ModelTemplate] = MappingProxyType(
    {
        "cartpole": _ModelTemplate(
            state_names=("x", "x_dot", "theta", "theta_dot"),
            control_names=("force",),
            psi_names=("m_c", "m_p", "l"),
            true_psi=(1.0, 0.1, 0.5),
            constants={"gravity": 9.8, "inertia_coefficient": 0.1},
            time_kind=TimeKind.CONTINUOUS,
            evaluator=_cartpole_f,
        ),
        "idp": _ModelTemplate(
            state_names=("x", "x_dot", "theta1", "theta1_dot", "theta2", "theta2_dot"),
            control_names=("action",),
            psi_names=("m0", "m1", "m2", "L1", "L2"),
            true_psi=(10.0, 4.2, 4.2, 0.6, 0.6),
            constants={"gravity": 9.81, "gear": 100.0},
            time_kind=TimeKind.CONTINUOUS,
            evaluator=_idp_f,
        ),
        "unicycle": _ModelTemplate(
            state_names=("x", "y", "theta", "v", "omega"),
            control_names=("delta_v", "delta_omega"),
            psi_names=("gain_v", "gain_omega"),
            true_psi=(0.85, 0.75),
            constants={"control_interval": 0.1},
            time_kind=TimeKind.CONTINUOUS,
            evaluator=_unicycle_f,
        ),
        "linear": _ModelTemplate(
            state_names=("x",),
            control_names=("u",),
            psi_names=("a", "b"),
            true_psi=(1.05, 0.5),
            constants={},
            time_kind=TimeKind.DISCRETE,
            evaluator=_linear_f,
            positive_psi=False,
        ),
    }
)


def _resolve_psi(
    template: _ModelTemplate, psi: Mapping[str, float] | Sequence[float] | None
) -> tuple[float, ...]:
    if psi is None:
        return template.true_psi
    if isinstance(psi, Mapping):
        unknown = set(psi) - set(template.psi_names)
        if unknown:
            raise InvalidParameterError(f"unknown parameters {sorted(unknown)}")
        defaults = dict(zip(template.psi_names, template.true_psi, strict=True))
        defaults.update({k: float(v) for k, v in psi.items()})
        return tuple(defaults[name] for name in template.psi_names)
    values = tuple(float(v) for v in psi)
    if len(values) != len(template.psi_names):
        raise InvalidParameterError(
            f"expected {len(template.psi_names)} parameters {template.psi_names}, got {len(values)}"
        )
    return values


def make_model(
    name: str,
    psi: Mapping[str, float] | Sequence[float] | None = None,
    constants: Mapping[str, float] | None = None,
) -> PartialModel:
    """Build a registered model.

    Args:
        name: One of ``cartpole``, ``idp``, ``unicycle``, ``linear``.
        psi: ψ values by name or position; missing entries take the true
            physical values.
        constants: Overrides for the known constants.

    Raises:
        InvalidParameterError: For unknown names or keys, and for nonpositive
            physical constants or physical ψ entries.
    """
    template = MODEL_TEMPLATES.get(name)
    if template is None:
        raise InvalidParameterError(
            f"unknown model '{name}'; choose from {sorted(MODEL_TEMPLATES)}"
        )

    merged = dict(template.constants)
    if constants:
        unknown = set(constants) - set(template.constants)
        if unknown:
            raise InvalidParameterError(f"unknown constants for {name}: {sorted(unknown)}")
        merged.update({k: float(v) for k, v in constants.items()})
    for key, value in merged.items():
        if not value > 0:
            raise InvalidParameterError(f"constant '{key}' must be positive, got {value}")

    values = _resolve_psi(template, psi)
    if template.positive_psi:
        for key, value in zip(template.psi_names, values, strict=True):
            if not value > 0:
                raise InvalidParameterError(f"parameter '{key}' must be positive, got {value}")

    return PartialModel(
        name=name,
        state_dim=len(template.state_names),
        control_dim=len(template.control_names),
        time_kind=template.time_kind,
        known_constants=merged,
        psi=ParamVector(template.psi_names, np.array(values)),
        evaluator=template.evaluator,
        state_names=template.state_names,
        control_names=template.control_names,
    )


def make_cartpole(
    psi: Mapping[str, float] | Sequence[float] | None = None,
    constants: Mapping[str, float] | None = None,
) -> PartialModel:
    """Cart-pole: state (x, ẋ, θ, θ̇), ψ = (m_c, m_p, l)."""
    return make_model("cartpole", psi, constants)


def make_idp(
    psi: Mapping[str, float] | Sequence[float] | None = None,
    constants: Mapping[str, float] | None = None,
) -> PartialModel:
    """Inverted double pendulum.

    State (x, ẋ, θ₁, θ̇₁, θ₂, θ̇₂) and ψ = (m₀, m₁, m₂, L₁, L₂).
    """
    return make_model("idp", psi, constants)


def make_unicycle(
    psi: Mapping[str, float] | Sequence[float] | None = None,
    constants: Mapping[str, float] | None = None,
) -> PartialModel:
    """Unicycle: state (x, y, θ, v, ω), inputs (δv, δω), ψ = actuator gains."""
    return make_model("unicycle", psi, constants)


def idp_mechanical_energy(model: PartialModel, state: FloatArray) -> float:
    """Kinetic plus potential energy of the double pendulum on a cart."""
    _, x_dot, th1, th1_dot, th2, th2_dot = (float(v) for v in state)
    psi = model.psi.values.tolist()
    _, m1, m2, l1, l2 = psi
    mass = np.array(idp_mass_matrix(th1, th2, psi), dtype=np.float64)
    qd = np.array([x_dot, th1_dot, th2_dot])
    kinetic = 0.5 * float(qd @ mass @ qd)
    g = model.known_constants["gravity"]
    potential = g * ((0.5 * m1 * l1 + m2 * l1) * np.cos(th1) + 0.5 * m2 * l2 * np.cos(th2))
    return kinetic + float(potential)
