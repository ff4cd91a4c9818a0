"""PK and plain policies.

A PK policy acts with ``u = clamp(û + δu)``, where û comes from the embedded
LQR head and δu from a corrective network fed with the state error. A plain
policy is the same network without the head. Network outputs are scaled by
the half-width of the action box.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from pkcontrol.core.dynamics import make_model
from pkcontrol.core.errors import InvalidParameterError
from pkcontrol.core.models import ActionMode, EnvSpec, FloatArray, Setpoint
from pkcontrol.envs.base import Environment, state_error
from pkcontrol.policy.controller import LqrCache, LqrHead
from pkcontrol.policy.mlp import MlpParams, mlp_backward, mlp_forward, mlp_jacobian
from pkcontrol.utils.config import ExperimentConfig

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class ActionWithGrads:
    """An action and its derivatives.

    ``du_dpsi`` (m x |ψ|) and ``du_dmlp`` (m x network parameters) are
    derivatives of the executed action; rows of clamped coordinates are zero.
    """

    u: FloatArray
    raw: FloatArray
    mean: FloatArray
    du_dpsi: FloatArray
    du_dmlp: FloatArray
    log_std: FloatArray | None = None
    stability_event: bool = False


class Policy:
    """Corrective network with an optional embedded LQR head."""

    def __init__(
        self,
        spec: EnvSpec,
        network: MlpParams,
        head: LqrHead | None = None,
        stochastic: bool = False,
        angle_indices: Sequence[int] = (),
        log_std_bounds: tuple[float, float] = (-5.0, 1.0),
    ) -> None:
        m = spec.act_dim
        if network.input_dim != spec.obs_dim:
            raise InvalidParameterError(
                f"network input {network.input_dim} does not match obs_dim {spec.obs_dim}"
            )
        if network.output_dim != (2 * m if stochastic else m):
            raise InvalidParameterError(f"network output {network.output_dim} does not fit head")
        self.spec = spec
        self.network = network
        self.head = head
        self.stochastic = stochastic
        self.angle_indices = tuple(angle_indices)
        self.log_std_bounds = log_std_bounds
        self._scale = spec.act_scale

    @property
    def is_pk(self) -> bool:
        return self.head is not None

    @property
    def psi(self) -> FloatArray:
        return self.head.psi if self.head is not None else np.zeros(0)

    @property
    def num_psi(self) -> int:
        return self.head.num_psi if self.head is not None else 0

    @property
    def stability_events(self) -> int:
        return self.head.stability_events if self.head is not None else 0

    def set_psi(self, values: FloatArray) -> None:
        if self.head is not None:
            self.head.set_psi(values)

    def prepare(self, ref: Setpoint) -> tuple[LqrCache | None, bool]:
        """Refresh the LQR head for ``ref`` (memoized); no-op for plain policies."""
        if self.head is None:
            return None, False
        return self.head.refresh(ref)

    def features(self, obs: FloatArray, ref: Setpoint) -> FloatArray:
        return state_error(obs, ref.x_d, self.angle_indices)

    def _split(self, out: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray]:
        m = self.spec.act_dim
        mean_out = out[..., :m]
        if not self.stochastic:
            return mean_out, np.zeros_like(mean_out), np.zeros_like(mean_out, dtype=bool)
        raw_ls = out[..., m:]
        lo, hi = self.log_std_bounds
        return mean_out, np.clip(raw_ls, lo, hi), (raw_ls > lo) & (raw_ls < hi)

    def _lqr(self, obs: FloatArray, ref: Setpoint) -> tuple[FloatArray, FloatArray, bool]:
        """û and dû/dψ for one state."""
        m = self.spec.act_dim
        cache, event = self.prepare(ref)
        if cache is None or self.head is None:
            return np.zeros(m), np.zeros((m, 0)), False
        err = self.features(obs, ref)
        return (
            self.head.control(cache, err, ref.u_d),
            self.head.control_psi_jacobian(cache, err),
            event,
        )

    def act(
        self,
        obs: FloatArray,
        ref: Setpoint,
        mode: ActionMode = ActionMode.DETERMINISTIC,
        rng: np.random.Generator | None = None,
    ) -> ActionWithGrads:
        """Action with its ψ and network gradients.

        Stochastic mode samples ``raw = mean + σ ε``; the executed action is
        the clamped sample.
        """
        feats = self.features(obs, ref)
        out, _ = mlp_forward(self.network, feats)
        mean_out, log_std, ls_active = self._split(out)
        u_hat, du_hat_dpsi, event = self._lqr(obs, ref)
        mean = u_hat + self._scale * mean_out
        m = self.spec.act_dim
        du_dmlp = mlp_jacobian(self.network, feats, range(m)) * self._scale[:, None]

        raw = mean
        if mode is ActionMode.STOCHASTIC:
            if not self.stochastic:
                raise InvalidParameterError("stochastic actions need a Gaussian head")
            if rng is None:
                raise InvalidParameterError("stochastic actions need a random generator")
            noise = self._scale * np.exp(log_std) * rng.standard_normal(mean.shape)
            raw = mean + noise
            # d raw / d log_std = noise wherever the log-std is not clipped
            ls_jac = mlp_jacobian(self.network, feats, range(m, 2 * m))
            du_dmlp += (noise * ls_active)[:, None] * ls_jac

        u = self.spec.clamp(raw)
        inside = (raw > self.spec.act_low) & (raw < self.spec.act_high)
        du_dmlp[~inside] = 0.0
        du_dpsi = du_hat_dpsi.copy()
        du_dpsi[~inside] = 0.0
        return ActionWithGrads(
            u=u,
            raw=raw,
            mean=mean,
            du_dpsi=du_dpsi,
            du_dmlp=du_dmlp,
            log_std=log_std if self.stochastic else None,
            stability_event=event,
        )

    def sample(
        self, obs: FloatArray, ref: Setpoint, rng: np.random.Generator
    ) -> tuple[FloatArray, FloatArray]:
        """Fast stochastic action without gradients: (clamped action, raw sample)."""
        mean, log_std = self._mean_and_log_std(obs, ref)
        raw = mean + self._scale * np.exp(log_std) * rng.standard_normal(mean.shape)
        return self.spec.clamp(raw), raw

    def _mean_and_log_std(self, obs: FloatArray, ref: Setpoint) -> tuple[FloatArray, FloatArray]:
        out, _ = mlp_forward(self.network, self.features(obs, ref))
        mean_out, log_std, _ = self._split(out)
        u_hat, _, _ = self._lqr(obs, ref)
        return u_hat + self._scale * mean_out, log_std

    def mean_action(self, obs: FloatArray, ref: Setpoint) -> FloatArray:
        """Clamped deterministic action without gradients."""
        return self.spec.clamp(self._mean_and_log_std(obs, ref)[0])

    def _batch_lqr(
        self, obs: FloatArray, refs: Sequence[Setpoint]
    ) -> tuple[FloatArray, list[FloatArray]]:
        m = self.spec.act_dim
        u_hat = np.zeros((len(refs), m))
        jacs: list[FloatArray] = []
        for i, ref in enumerate(refs):
            u, jac, _ = self._lqr(obs[i], ref)
            u_hat[i] = u
            jacs.append(jac)
        return u_hat, jacs

    def batch_features(self, obs: FloatArray, refs: Sequence[Setpoint]) -> FloatArray:
        x_d = np.stack([ref.x_d for ref in refs])
        return state_error(obs, x_d, self.angle_indices)

    def mean_actions(self, obs: FloatArray, refs: Sequence[Setpoint]) -> FloatArray:
        """Clamped deterministic actions for a batch of states."""
        out, _ = mlp_forward(self.network, self.batch_features(obs, refs))
        mean_out, _, _ = self._split(out)
        u_hat, _ = self._batch_lqr(obs, refs)
        return self.spec.clamp(u_hat + self._scale * mean_out)

    def actor_gradient(
        self, obs: FloatArray, refs: Sequence[Setpoint], action_grads: FloatArray
    ) -> tuple[FloatArray, FloatArray]:
        """Gradient of ``Σ_b action_grads[b] · clamp(mean_b)`` over network parameters and ψ."""
        out, acts = mlp_forward(self.network, self.batch_features(obs, refs))
        mean_out, _, _ = self._split(out)
        u_hat, jacs = self._batch_lqr(obs, refs)
        mean = u_hat + self._scale * mean_out
        inside = (mean > self.spec.act_low) & (mean < self.spec.act_high)
        g = np.where(inside, action_grads, 0.0)
        output_grad = np.zeros_like(out)
        output_grad[:, : self.spec.act_dim] = g * self._scale
        g_net, _ = mlp_backward(self.network, acts, output_grad)
        g_psi = np.zeros(self.num_psi)
        for i, jac in enumerate(jacs):
            if jac.size:
                g_psi += g[i] @ jac
        return g_net, g_psi

    def log_prob_gradient(
        self,
        obs: FloatArray,
        refs: Sequence[Setpoint],
        raw: FloatArray,
        weights: FloatArray,
    ) -> tuple[FloatArray, FloatArray, FloatArray]:
        """Log-likelihoods of raw samples and the gradient of ``Σ w_b log π(raw_b)``.

        Returns:
            Per-sample log-likelihoods, the network gradient and the ψ gradient.
        """
        if not self.stochastic:
            raise InvalidParameterError("log-likelihoods need a Gaussian head")
        out, acts = mlp_forward(self.network, self.batch_features(obs, refs))
        mean_out, log_std, ls_active = self._split(out)
        u_hat, jacs = self._batch_lqr(obs, refs)
        mean = u_hat + self._scale * mean_out
        std = self._scale * np.exp(log_std)
        z = (raw - mean) / std
        logp = np.sum(-0.5 * z * z - np.log(std) - _LOG_SQRT_2PI, axis=1)

        w = np.asarray(weights, dtype=np.float64)[:, None]
        d_mean = w * z / std
        d_log_std = w * (z * z - 1.0) * ls_active
        g_net, _ = mlp_backward(
            self.network, acts, np.concatenate([d_mean * self._scale, d_log_std], axis=1)
        )
        g_psi = np.zeros(self.num_psi)
        for i, jac in enumerate(jacs):
            if jac.size:
                g_psi += d_mean[i] @ jac
        return logp, g_net, g_psi

    def clone(self) -> Policy:
        """Independent copy; the LQR head starts with an empty memo."""
        head = None
        if self.head is not None:
            head = LqrHead(
                self.head.model,
                self.head.q,
                self.head.r,
                self.head.tau,
                memo_size=self.head.memo_size,
                pullback=self.head.pullback,
            )
        return Policy(
            self.spec,
            self.network.copy(),
            head=head,
            stochastic=self.stochastic,
            angle_indices=self.angle_indices,
            log_std_bounds=self.log_std_bounds,
        )


def network_sizes(spec: EnvSpec, hidden: Sequence[int], stochastic: bool) -> tuple[int, ...]:
    out = 2 * spec.act_dim if stochastic else spec.act_dim
    return (spec.obs_dim, *hidden, out)


def build_head(env: Environment, config: ExperimentConfig) -> LqrHead:
    """LQR head with the configured (possibly wrong) ψ and cost weights."""
    pc = config.policy
    psi = pc.psi_init if pc.psi_init is not None else env.default_psi_init
    model = make_model(env.model_name, psi, config.model.constants or None)
    q_diag = pc.q_diag if pc.q_diag is not None else env.default_q
    r_diag = pc.r_diag if pc.r_diag is not None else env.default_r
    if len(q_diag) != model.state_dim or len(r_diag) != model.control_dim:
        raise InvalidParameterError(
            f"q/r diagonals need {model.state_dim} and {model.control_dim} entries"
        )
    return LqrHead(
        model,
        np.diag(np.asarray(q_diag, dtype=np.float64)),
        np.diag(np.asarray(r_diag, dtype=np.float64)),
        tau=pc.tau if pc.tau is not None else env.dt,
        memo_size=pc.memo_size,
        pullback=pc.pullback,
    )


def build_policy(
    env: Environment, config: ExperimentConfig, rng: np.random.Generator
) -> Policy:
    """Policy for ``config.algorithm`` on ``env``.

    On-policy algorithms get a Gaussian head; PK algorithms and pure LQR get
    the embedded LQR head. Plain policies use fan-in scaled hidden weights.
    """
    pc = config.policy
    algorithm = config.algorithm
    stochastic = algorithm.is_on_policy
    head = build_head(env, config) if algorithm.uses_model else None
    m = env.task_spec.act_dim
    network = MlpParams.init(
        network_sizes(env.task_spec, pc.hidden_sizes, stochastic),
        rng,
        hidden_scale=pc.init_scale if head is not None else None,
        zero_output=True,
        output_bias=[0.0] * m + [pc.log_std_init] * m if stochastic else None,
    )
    return Policy(
        env.task_spec,
        network,
        head=head,
        stochastic=stochastic,
        angle_indices=env.angle_indices,
        log_std_bounds=(pc.log_std_min, pc.log_std_max),
    )
