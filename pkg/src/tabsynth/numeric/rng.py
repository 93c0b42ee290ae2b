from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream identified by ``(seed, stream)``.

    Distinct stream ids give statistically independent generators
    (``SeedSequence`` spawn keys).
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream: int) -> RngStream:
        # nested streams: fold the parent's stream id into the seed
        mixed = np.random.SeedSequence([int(self.seed) & 0xFFFFFFFFFFFFFFFF, int(self.stream)])
        return RngStream(int(mixed.generate_state(1, dtype=np.uint64)[0]), stream)


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an RngStream or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return RngStream(int(rng)).generator()
