"""Deterministic, platform-independent random draws.

Every stochastic choice in the engine is keyed: a draw is a pure function
of (run key, agent id, argument id).  This keeps transcripts bit-identical
across replays and across serial/parallel batch runners, and makes a
learnt argument's bias independent of when it is learnt.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np


def stable_hash64(text: str) -> int:
    """64-bit hash that is stable across platforms and interpreter runs."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def seeded_generator(*entropy: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(entropy))))


@dataclass
class DrawContext:
    """Per-run source of uniforms keyed by (agent, argument)."""

    key: tuple[int, ...] = ()
    _cache: dict[tuple[str, str], float] = field(default_factory=dict, repr=False)

    def uniform(self, agent: str, argument: str) -> float:
        cached = self._cache.get((agent, argument))
        if cached is None:
            gen = seeded_generator(*self.key, stable_hash64(agent), stable_hash64(argument))
            cached = float(gen.random())
            self._cache[(agent, argument)] = cached
        return cached


def open_unit(gen: np.random.Generator) -> float:
    """Uniform draw from the open interval (0, 1)."""
    value = float(gen.random())
    while value == 0.0:
        value = float(gen.random())
    return value
