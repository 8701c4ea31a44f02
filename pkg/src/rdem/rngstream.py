"""Counter-based random number streams.

Every stochastic stage of a run draws from a Philox generator whose
256-bit counter encodes the stage's position (domain, pass, step), with
the root seed in the key.  Streams are therefore independent of execution
order: any stage can be regenerated in isolation, and results do not
depend on how work is scheduled across workers.  Within a stream,
per-particle randomness occupies fixed positions (row j of a vector draw
belongs to particle j).
"""

from __future__ import annotations

import numpy as np

# Counter word layout: [draw counter, domain, pass/run index, step index].
DOMAIN_INIT = 1
DOMAIN_STEP = 2
DOMAIN_PREDICT = 3
DOMAIN_SIMULATE = 4
DOMAIN_ORACLE = 5

_KEY_SALT = np.uint64(0x9E3779B97F4A7C15)


class RngFamily:
    """Factory for named Philox streams derived from one root seed.

    ``stream(*path)`` returns a fresh ``numpy.random.Generator`` whose
    Philox counter starts at ``[0, *path]`` (up to three path words).
    Distinct paths never overlap for fewer than 2**64 blocks drawn per
    stream.  ``child(k)`` derives an independent family (used for
    multi-run diagnostics) by salting the key.
    """

    def __init__(self, seed: int, salt: int = 0):
        self.seed = int(seed)
        self.salt = int(salt)
        self._key = np.array(
            [np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF),
             np.uint64(self.salt & 0xFFFFFFFFFFFFFFFF) ^ _KEY_SALT],
            dtype=np.uint64,
        )

    def stream(self, *path: int) -> np.random.Generator:
        if len(path) > 3:
            raise ValueError("stream path supports at most 3 words")
        counter = np.zeros(4, dtype=np.uint64)
        for i, word in enumerate(path):
            counter[i + 1] = np.uint64(int(word) & 0xFFFFFFFFFFFFFFFF)
        return np.random.Generator(np.random.Philox(key=self._key, counter=counter))

    def child(self, k: int) -> "RngFamily":
        return RngFamily(self.seed, salt=self.salt * 1000003 + int(k) + 1)

    def __repr__(self):
        return f"RngFamily(seed={self.seed}, salt={self.salt})"


def as_family(rng) -> RngFamily:
    """Coerce an int seed or RngFamily into an RngFamily."""
    if isinstance(rng, RngFamily):
        return rng
    return RngFamily(int(rng))
