"""Twin-delayed deterministic actor-critic (TD3) for plain and PK policies.

The actor gradient is the first critic's action gradient chained through
the policy: into the network weights for both policy kinds, and into ψ
through dû/dψ for PK policies. The target actor is a polyak copy of the
whole policy, ψ included.
"""

from __future__ import annotations

import numpy as np

from pkcontrol.core.errors import InvalidParameterError
from pkcontrol.core.models import FloatArray, Transition
from pkcontrol.envs.base import Environment, start_episode
from pkcontrol.policy.policies import Policy
from pkcontrol.rl.buffer import ReplayBatch, ReplayBuffer
from pkcontrol.rl.critic import TwinCritic, polyak_update
from pkcontrol.rl.evaluation import TrainingLog
from pkcontrol.rl.trainer import ProgressCallback, StopCheck, Trainer
from pkcontrol.utils.config import ExperimentConfig


class TD3Trainer(Trainer):
    def __init__(
        self,
        env: Environment,
        policy: Policy,
        config: ExperimentConfig,
        seed: int,
        log: TrainingLog | None = None,
        on_progress: ProgressCallback | None = None,
        should_stop: StopCheck | None = None,
    ) -> None:
        if policy.stochastic:
            raise InvalidParameterError("TD3 needs a deterministic policy head")
        super().__init__(env, policy, config, seed, log, on_progress, should_stop)
        self.target = policy.clone()
        self.critic = TwinCritic(
            env.task_spec.obs_dim,
            env.task_spec.act_scale,
            self.rl.critic_hidden_sizes,
            self.streams.policy_init,
            lr=self.rl.lr_critic,
            optimizer=self.rl.optimizer,
            max_grad_norm=self.rl.max_grad_norm,
        )
        self.buffer = ReplayBuffer(self.rl.buffer_size, env.task_spec)
        self.critic_updates = 0

    def explore(self, obs: FloatArray, ref_action: FloatArray) -> FloatArray:
        """Behaviour action: policy action plus Gaussian noise.

        Plain policies act uniformly at random during warm-up. PK policies
        explore around their LQR prior from the first step unless
        ``rl.pk_prior_warmup`` is off, in which case they warm up uniformly too.
        """
        spec, rng = self.env.task_spec, self.streams.exploration
        prior = self.policy.is_pk and self.rl.pk_prior_warmup
        if self.env_steps < self.rl.warmup_steps and not prior:
            return rng.uniform(spec.act_low, spec.act_high)
        noise = rng.normal(0.0, self.rl.exploration_noise, size=spec.act_dim) * spec.act_scale
        return spec.clamp(ref_action + noise)

    def critic_targets(self, batch: ReplayBatch) -> FloatArray:
        """Clipped double-Q targets with target-policy smoothing."""
        spec, rl = self.env.task_spec, self.rl
        next_actions = self.target.mean_actions(batch.next_obs, batch.next_refs)
        noise = self.streams.exploration.normal(0.0, rl.target_noise, size=next_actions.shape)
        noise = np.clip(noise, -rl.target_noise_clip, rl.target_noise_clip) * spec.act_scale
        next_actions = spec.clamp(next_actions + noise)
        next_features = self.target.batch_features(batch.next_obs, batch.next_refs)
        q_next = self.critic.target_min(self.critic.inputs(next_features, next_actions))
        return batch.reward + rl.gamma * (1.0 - batch.terminated) * q_next

    def critic_step(self, batch: ReplayBatch) -> float:
        features = self.policy.batch_features(batch.obs, batch.refs)
        targets = self.critic_targets(batch)
        self.critic_updates += 1
        return self.critic.update(self.critic.inputs(features, batch.action), targets)

    def actor_step(self, batch: ReplayBatch) -> float:
        """Ascend the mean first-critic value; returns ``-mean Q1``."""
        features = self.policy.batch_features(batch.obs, batch.refs)
        actions = self.policy.mean_actions(batch.obs, batch.refs)
        inputs = self.critic.inputs(features, actions)
        dq_da = self.critic.action_gradient(inputs) / len(batch)
        g_net, g_psi = self.policy.actor_gradient(batch.obs, batch.refs, dq_da)
        self.apply_gradients(-g_net, -g_psi)
        return -float(np.mean(self.critic.q1_values(inputs)))

    def soft_update_targets(self) -> None:
        polyak = self.rl.polyak
        self.critic.soft_update(polyak)
        polyak_update(self.target.network, self.policy.network, polyak)
        if self.policy.num_psi:
            self.target.set_psi(polyak * self.target.psi + (1.0 - polyak) * self.policy.psi)

    def update(self) -> None:
        batch = self.buffer.sample(self.rl.batch_size, self.streams.buffer)
        self.critic_loss = self.critic_step(batch)
        if self.critic_updates % self.rl.policy_delay == 0:
            self.actor_loss = self.actor_step(batch)
            self.soft_update_targets()
        self._check_divergence(self.actor_loss, self.critic_loss)

    def _run(self) -> None:
        env = self.env
        obs = start_episode(env, self.streams.env)
        ref = env.reference_at(obs)
        while self.budget_left:
            if self._stop_requested():
                return
            action = self.explore(obs, self.policy.mean_action(obs, ref))
            result = env.step(action)
            next_ref = env.reference_at(result.next_obs) if env.refresh_every_step else ref
            self.buffer.add(
                Transition(
                    obs=obs,
                    action=action,
                    reward=result.reward,
                    next_obs=result.next_obs,
                    terminated=result.terminated,
                    ref=ref,
                    next_ref=next_ref,
                )
            )
            if self.env_steps + 1 >= self.rl.warmup_steps:
                self.update()
            self._record_steps()
            if result.done:
                self.episodes += 1
                obs = start_episode(env, self.streams.env)
                ref = env.reference_at(obs)
            else:
                obs, ref = result.next_obs, next_ref
