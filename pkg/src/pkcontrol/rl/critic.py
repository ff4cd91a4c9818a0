"""Critic networks: twin Q-functions with targets, and a state-value baseline.

Q-networks see the concatenation of the policy's state error and the
action divided by the half-width of the action box.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from pkcontrol.core.models import FloatArray
from pkcontrol.policy.mlp import MlpParams, mlp_backward, mlp_forward
from pkcontrol.rl.optim import Optimizer, make_optimizer


def polyak_update(target: MlpParams, online: MlpParams, polyak: float) -> None:
    """``target ← ρ·target + (1 − ρ)·online`` in place."""
    for i in range(len(target.weights)):
        target.weights[i] = polyak * target.weights[i] + (1.0 - polyak) * online.weights[i]
        target.biases[i] = polyak * target.biases[i] + (1.0 - polyak) * online.biases[i]


def _mse_step(
    net: MlpParams, optimizer: Optimizer, inputs: FloatArray, targets: FloatArray
) -> float:
    out, acts = mlp_forward(net, inputs)
    residual = out[:, 0] - targets
    loss = float(np.mean(residual * residual))
    grad_out = (2.0 / len(targets)) * residual[:, None]
    grad, _ = mlp_backward(net, acts, grad_out)
    net.assign(optimizer.step(net.flatten(), grad))
    return loss


class TwinCritic:
    """Two Q-networks with polyak-averaged target copies."""

    def __init__(
        self,
        obs_dim: int,
        act_scale: FloatArray,
        hidden_sizes: Sequence[int],
        rng: np.random.Generator,
        lr: float = 1e-3,
        optimizer: str = "adam",
        max_grad_norm: float | None = 10.0,
    ) -> None:
        self.act_scale = np.asarray(act_scale, dtype=np.float64)
        sizes = (obs_dim + len(self.act_scale), *hidden_sizes, 1)
        self.q1 = MlpParams.init(sizes, rng, zero_output=False)
        self.q2 = MlpParams.init(sizes, rng, zero_output=False)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self._opt1 = make_optimizer(optimizer, self.q1.num_params, lr, max_grad_norm)
        self._opt2 = make_optimizer(optimizer, self.q2.num_params, lr, max_grad_norm)

    def inputs(self, features: FloatArray, actions: FloatArray) -> FloatArray:
        return np.concatenate([features, actions / self.act_scale], axis=-1)

    def q1_values(self, inputs: FloatArray) -> FloatArray:
        return mlp_forward(self.q1, inputs)[0][:, 0]

    def target_min(self, inputs: FloatArray) -> FloatArray:
        """Clipped double-Q estimate ``min(Q1', Q2')`` from the target networks."""
        t1 = mlp_forward(self.q1_target, inputs)[0][:, 0]
        t2 = mlp_forward(self.q2_target, inputs)[0][:, 0]
        return np.minimum(t1, t2)

    def update(self, inputs: FloatArray, targets: FloatArray) -> float:
        """One regression step of both critics; returns the summed MSE."""
        return _mse_step(self.q1, self._opt1, inputs, targets) + _mse_step(
            self.q2, self._opt2, inputs, targets
        )

    def action_gradient(self, inputs: FloatArray) -> FloatArray:
        """dQ1/da for every row, in unscaled action units."""
        _, acts = mlp_forward(self.q1, inputs)
        _, d_in = mlp_backward(self.q1, acts, np.ones((inputs.shape[0], 1)))
        m = len(self.act_scale)
        return d_in[:, -m:] / self.act_scale

    def soft_update(self, polyak: float) -> None:
        polyak_update(self.q1_target, self.q1, polyak)
        polyak_update(self.q2_target, self.q2, polyak)


class ValueBaseline:
    """State-value network fitted to reward-to-go by mean-squared regression."""

    def __init__(
        self,
        obs_dim: int,
        hidden_sizes: Sequence[int],
        rng: np.random.Generator,
        lr: float = 1e-3,
        optimizer: str = "adam",
        max_grad_norm: float | None = 10.0,
    ) -> None:
        self.net = MlpParams.init((obs_dim, *hidden_sizes, 1), rng)
        self._opt = make_optimizer(optimizer, self.net.num_params, lr, max_grad_norm)

    def predict(self, features: FloatArray) -> FloatArray:
        return mlp_forward(self.net, features)[0][:, 0]

    def fit(self, features: FloatArray, targets: FloatArray, epochs: int) -> float:
        """Full-batch regression; returns the loss of the last epoch."""
        loss = 0.0
        for _ in range(epochs):
            loss = _mse_step(self.net, self._opt, features, targets)
        return loss
