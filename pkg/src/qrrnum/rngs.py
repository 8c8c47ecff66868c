"""Named, buffered RNG substreams for reproducible simulation runs.

One substream per concern (channel evolution, stay/dummy coins, policy
mixture sampling) so that policies can be compared across runs with
common random numbers.  Uniforms are drawn in blocks because scalar
Generator calls dominate the slot loop otherwise.
"""

from __future__ import annotations

import numpy as np

_BLOCK = 1 << 16


class BufferedUniform:
    """Block-buffered U(0,1) draws from one numpy Generator."""

    __slots__ = ("_gen", "_buf", "_i")

    def __init__(self, gen: np.random.Generator):
        self._gen = gen
        # plain Python floats: cheaper to compare and log() in tight loops
        self._buf = gen.random(_BLOCK).tolist()
        self._i = 0

    def u(self) -> float:
        i = self._i
        if i >= _BLOCK:
            self._buf = self._gen.random(_BLOCK).tolist()
            i = 0
        self._i = i + 1
        return self._buf[i]

    @property
    def generator(self) -> np.random.Generator:
        return self._gen


class RngStreams:
    """The three substreams of a run, derived from one seed."""

    def __init__(self, seed: int):
        self.seed = seed
        ss = np.random.SeedSequence(seed)
        kids = ss.spawn(3)
        self.channel = BufferedUniform(np.random.default_rng(kids[0]))
        self.coin = BufferedUniform(np.random.default_rng(kids[1]))
        self.mix = BufferedUniform(np.random.default_rng(kids[2]))
