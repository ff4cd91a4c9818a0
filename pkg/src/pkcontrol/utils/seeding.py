"""Named random streams derived from one run seed."""

from __future__ import annotations

import numpy as np

# Stable indices: new streams are appended, existing ones never renumbered
STREAM_INDEX: dict[str, int] = {
    "env": 0,
    "policy_init": 1,
    "exploration": 2,
    "buffer": 3,
    "eval": 4,
}


class RandomStreams:
    """Independent ``numpy.random.Generator`` per named component.

    Example:
        >>> streams = RandomStreams(7)
        >>> streams.env.uniform()  # unaffected by draws from streams.buffer
    """

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self._generators = {
            name: np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
            for name, index in STREAM_INDEX.items()
        }

    def get(self, name: str) -> np.random.Generator:
        try:
            return self._generators[name]
        except KeyError as e:
            raise KeyError(f"unknown random stream '{name}'") from e

    @property
    def env(self) -> np.random.Generator:
        return self._generators["env"]

    @property
    def policy_init(self) -> np.random.Generator:
        return self._generators["policy_init"]

    @property
    def exploration(self) -> np.random.Generator:
        return self._generators["exploration"]

    @property
    def buffer(self) -> np.random.Generator:
        return self._generators["buffer"]

    @property
    def eval(self) -> np.random.Generator:
        return self._generators["eval"]
