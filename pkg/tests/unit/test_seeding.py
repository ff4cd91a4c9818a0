"""Unit tests for named random streams."""

import numpy as np
import pytest

from pkcontrol.utils.seeding import STREAM_INDEX, RandomStreams


class TestRandomStreams:
    def test_same_seed_same_draws(self) -> None:
        """Equal seeds reproduce every stream."""
        first, second = RandomStreams(11), RandomStreams(11)
        for name in STREAM_INDEX:
            np.testing.assert_array_equal(
                first.get(name).normal(size=4), second.get(name).normal(size=4)
            )

    def test_streams_are_independent(self) -> None:
        """Draws from one stream do not shift another."""
        untouched = RandomStreams(5).env.normal(size=3)
        streams = RandomStreams(5)
        streams.buffer.normal(size=100)
        streams.exploration.uniform(size=7)
        np.testing.assert_array_equal(streams.env.normal(size=3), untouched)

    def test_streams_differ_from_each_other(self) -> None:
        """Different names give different sequences."""
        streams = RandomStreams(0)
        assert streams.env.uniform() != streams.eval.uniform()

    def test_seeds_differ(self) -> None:
        """Different seeds give different sequences."""
        assert RandomStreams(1).policy_init.uniform() != RandomStreams(2).policy_init.uniform()

    def test_properties_match_get(self) -> None:
        """Named properties return the same generator as get()."""
        streams = RandomStreams(3)
        assert streams.exploration is streams.get("exploration")

    def test_unknown_stream_raises(self) -> None:
        """Unknown names raise KeyError."""
        with pytest.raises(KeyError, match="unknown random stream"):
            RandomStreams(0).get("noise")
