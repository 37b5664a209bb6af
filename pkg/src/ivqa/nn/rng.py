"""Seeded random streams with platform-stable derivation.

Every stochastic component takes an ``Rng`` rather than touching global
state. ``derive`` builds an independent child stream from (seed, tags),
so workers and pipeline stages never share or race a generator.
"""

from __future__ import annotations

import zlib

import numpy as np


def _tag_to_int(tag) -> int:
    if isinstance(tag, str):
        return zlib.crc32(tag.encode("utf-8"))
    return int(tag) & 0xFFFFFFFF


class Rng:
    """Deterministic random source: identical seed => identical draws."""

    def __init__(self, seed: int, _spawn_key: tuple = ()):
        self.seed = int(seed)
        self._spawn_key = tuple(_spawn_key)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self._spawn_key)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def derive(self, *tags) -> "Rng":
        """Independent child stream keyed by (seed, existing key, tags)."""
        key = self._spawn_key + tuple(_tag_to_int(t) for t in tags)
        return Rng(self.seed, key)

    def normal(self, shape=None, mean=0.0, std=1.0):
        return self._gen.normal(mean, std, size=shape)

    def uniform(self, low, high, shape=None):
        return self._gen.uniform(low, high, size=shape)

    def integers(self, low, high, shape=None):
        """Uniform integers in [low, high)."""
        return self._gen.integers(low, high, size=shape)

    def random(self, shape=None):
        return self._gen.random(size=shape)

    def choice(self, items, size=None, replace=True):
        return self._gen.choice(items, size=size, replace=replace)

    def shuffle(self, items: list) -> None:
        self._gen.shuffle(items)
