"""Unit tests for the replay buffer."""

import numpy as np
import pytest

from pkcontrol.core.errors import InvalidParameterError
from pkcontrol.core.models import EnvSpec, Setpoint, Transition
from pkcontrol.rl.buffer import ReplayBuffer


def _spec() -> EnvSpec:
    return EnvSpec.from_bounds(2, [-1.0], [1.0], dt=0.1, max_steps=10)


def _transition(value: float, terminated: bool = False) -> Transition:
    ref = Setpoint(np.full(2, value), np.full(1, -value))
    return Transition(
        obs=np.full(2, value),
        action=np.full(1, value / 10.0),
        reward=value,
        next_obs=np.full(2, value + 1.0),
        terminated=terminated,
        ref=ref,
        next_ref=ref,
    )


class TestReplayBuffer:
    """Tests for storage and sampling."""

    def test_len_grows_to_capacity(self) -> None:
        """Length counts insertions up to the capacity."""
        buf = ReplayBuffer(3, _spec())
        for i in range(5):
            buf.add(_transition(float(i)))
        assert len(buf) == 3
        assert buf.insertions == 5

    def test_oldest_items_are_overwritten(self, rng: np.random.Generator) -> None:
        """After wrap-around only the newest transitions remain."""
        buf = ReplayBuffer(3, _spec())
        for i in range(5):
            buf.add(_transition(float(i)))
        batch = buf.sample(200, rng)
        assert set(batch.reward.tolist()) == {2.0, 3.0, 4.0}

    def test_sample_rows_stay_aligned(self, rng: np.random.Generator) -> None:
        """Every column of a sampled row comes from the same transition."""
        buf = ReplayBuffer(10, _spec())
        for i in range(6):
            buf.add(_transition(float(i), terminated=i == 5))
        batch = buf.sample(32, rng)
        assert len(batch) == 32
        for row in range(32):
            value = batch.reward[row]
            np.testing.assert_array_equal(batch.obs[row], value)
            np.testing.assert_array_equal(batch.next_obs[row], value + 1.0)
            assert batch.action[row, 0] == pytest.approx(value / 10.0)
            assert batch.terminated[row] == float(value == 5.0)
            np.testing.assert_array_equal(batch.refs[row].x_d, value)
            np.testing.assert_array_equal(batch.next_refs[row].u_d, -value)

    def test_sampled_refs_are_copies(self, rng: np.random.Generator) -> None:
        """Mutating a sampled reference leaves the buffer intact."""
        buf = ReplayBuffer(2, _spec())
        buf.add(_transition(1.0))
        batch = buf.sample(1, rng)
        batch.refs[0].x_d[0] = 99.0
        assert buf.sample(1, rng).refs[0].x_d[0] == 1.0

    def test_sampling_is_reproducible(self) -> None:
        """Equal generators draw equal indices."""
        buf = ReplayBuffer(10, _spec())
        for i in range(10):
            buf.add(_transition(float(i)))
        first = buf.sample_indices(8, np.random.default_rng(3))
        second = buf.sample_indices(8, np.random.default_rng(3))
        np.testing.assert_array_equal(first, second)

    def test_sampling_is_uniform(self) -> None:
        """Index frequencies over 1e5 draws stay within 5σ of uniform."""
        buf = ReplayBuffer(8, _spec())
        for i in range(12):
            buf.add(_transition(float(i)))
        draws = 100_000
        idx = buf.sample_indices(draws, np.random.default_rng(0))
        counts = np.bincount(idx, minlength=len(buf))
        assert counts.size == len(buf)
        p = 1.0 / len(buf)
        sigma = np.sqrt(draws * p * (1.0 - p))
        assert np.all(np.abs(counts - draws * p) <= 5.0 * sigma)

    def test_empty_sample_raises(self, rng: np.random.Generator) -> None:
        """Sampling an empty buffer is an error."""
        with pytest.raises(InvalidParameterError):
            ReplayBuffer(4, _spec()).sample(1, rng)

    def test_dimension_mismatch_raises(self) -> None:
        """Transitions must fit the environment spec."""
        bad = Transition(
            obs=np.zeros(3),
            action=np.zeros(1),
            reward=0.0,
            next_obs=np.zeros(3),
            terminated=False,
            ref=Setpoint(np.zeros(3), np.zeros(1)),
            next_ref=Setpoint(np.zeros(3), np.zeros(1)),
        )
        with pytest.raises(InvalidParameterError):
            ReplayBuffer(4, _spec()).add(bad)

    def test_non_finite_reward_raises(self) -> None:
        """NaN rewards never enter the buffer."""
        t = _transition(1.0)
        bad = Transition(t.obs, t.action, float("nan"), t.next_obs, False, t.ref, t.next_ref)
        with pytest.raises(InvalidParameterError):
            ReplayBuffer(4, _spec()).add(bad)

    def test_nonpositive_capacity_raises(self) -> None:
        """Capacity must be positive."""
        with pytest.raises(InvalidParameterError):
            ReplayBuffer(0, _spec())
