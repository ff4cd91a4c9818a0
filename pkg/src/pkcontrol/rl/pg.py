"""On-policy policy gradient (REINFORCE with reward-to-go and a value baseline).

The same trainer serves plain and PK policies. For a PK policy the Gaussian
mean depends on û, so the log-likelihood gradient also reaches ψ through
dû/dψ; ψ and the network have separate optimizers and learning rates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from pkcontrol.core.errors import InvalidParameterError
from pkcontrol.core.models import FloatArray, Setpoint
from pkcontrol.envs.base import Environment, start_episode
from pkcontrol.policy.policies import Policy
from pkcontrol.rl.critic import ValueBaseline
from pkcontrol.rl.evaluation import TrainingLog
from pkcontrol.rl.trainer import ProgressCallback, StopCheck, Trainer
from pkcontrol.utils.config import ExperimentConfig

ADVANTAGE_EPS = 1e-8


@dataclass
class Episode:
    obs: list[FloatArray] = field(default_factory=list)
    refs: list[Setpoint] = field(default_factory=list)
    raw_actions: list[FloatArray] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rewards)


def reward_to_go(rewards: list[float] | FloatArray, gamma: float) -> FloatArray:
    """Discounted sum of future rewards from every step of one episode."""
    out = np.zeros(len(rewards))
    running = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        running = rewards[t] + gamma * running
        out[t] = running
    return out


def normalize_advantages(adv: FloatArray) -> FloatArray:
    """Standardize advantages; a batch with (near) zero spread is left unchanged."""
    std = float(np.std(adv))
    if std > ADVANTAGE_EPS:
        return (adv - np.mean(adv)) / std
    return adv


class PGTrainer(Trainer):
    """Collects ``batch_episodes`` complete episodes per update."""

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
        if not policy.stochastic:
            raise InvalidParameterError("policy gradient needs a Gaussian policy head")
        super().__init__(env, policy, config, seed, log, on_progress, should_stop)
        self.baseline = ValueBaseline(
            env.task_spec.obs_dim,
            config.policy.hidden_sizes,
            self.streams.policy_init,
            lr=self.rl.lr_value,
            optimizer=self.rl.optimizer,
            max_grad_norm=self.rl.max_grad_norm,
        )

    def collect_episode(self) -> Episode:
        """Sample one episode from the stochastic policy.

        Evaluation points that fall inside the episode are taken between
        steps, so they see the parameters the episode was collected with.
        """
        env, policy = self.env, self.policy
        rng = self.streams.exploration
        obs = start_episode(env, self.streams.env)
        ref = env.reference_at(obs)
        episode = Episode()
        while True:
            if env.refresh_every_step and len(episode):
                ref = env.reference_at(obs)
            u, raw = policy.sample(obs, ref, rng)
            result = env.step(u)
            episode.obs.append(obs)
            episode.refs.append(ref)
            episode.raw_actions.append(raw)
            episode.rewards.append(result.reward)
            obs = result.next_obs
            self._record_steps()
            if result.done or not self.budget_left:
                self.episodes += 1
                return episode

    def update(self, episodes: list[Episode]) -> tuple[float, float]:
        """One policy and baseline update from complete episodes.

        Returns:
            The surrogate actor loss ``-mean(A·log π)`` and the baseline MSE.
        """
        obs = np.stack([o for ep in episodes for o in ep.obs])
        refs = [r for ep in episodes for r in ep.refs]
        raw = np.stack([a for ep in episodes for a in ep.raw_actions])
        returns = np.concatenate([reward_to_go(ep.rewards, self.rl.gamma) for ep in episodes])

        features = self.policy.batch_features(obs, refs)
        adv = normalize_advantages(returns - self.baseline.predict(features))
        weights = adv / len(adv)
        logp, g_net, g_psi = self.policy.log_prob_gradient(obs, refs, raw, weights)
        actor_loss = -float(np.sum(weights * logp))
        self.apply_gradients(-g_net, -g_psi)
        critic_loss = self.baseline.fit(features, returns, self.rl.value_epochs)
        self._check_divergence(actor_loss, critic_loss)
        return actor_loss, critic_loss

    def _run(self) -> None:
        while self.budget_left:
            batch: list[Episode] = []
            while len(batch) < self.rl.batch_episodes and self.budget_left:
                if self._stop_requested():
                    return
                batch.append(self.collect_episode())
            self.actor_loss, self.critic_loss = self.update(batch)
