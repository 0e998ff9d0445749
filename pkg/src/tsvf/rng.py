"""Counter-based random streams.

Every draw is a pure function of ``(seed, stream, counter)``, so a trial's
randomness does not depend on which other trials ran before it or on which
process ran them.

Algorithm (fixed; both kernel backends implement exactly this)::

    mix64(z)        = SplitMix64 finalizer
    key(seed, s)    = mix64(mix64(seed) + (s + 1) * GOLDEN)      mod 2**64
    bits(key, c)    = mix64(key + (c + 1) * GOLDEN)              mod 2**64
    uniform(key, c) = (bits(key, c) >> 11) * 2**-53               in [0, 1)

with ``GOLDEN = 0x9E3779B97F4A7C15``. Standard normals use Box-Muller on two
consecutive uniforms: ``sqrt(-2 log(1 - u0)) * cos(2 pi u1)``.
"""

from __future__ import annotations

import math

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_TWO_M53 = 2.0**-53
TWO_PI = 2.0 * math.pi


def mix64(z: int) -> int:
    z &= MASK64
    z ^= z >> 30
    z = (z * _MUL1) & MASK64
    z ^= z >> 27
    z = (z * _MUL2) & MASK64
    z ^= z >> 31
    return z


def stream_key(seed: int, stream: int) -> int:
    return mix64(mix64(seed) + (stream + 1) * GOLDEN)


def derive_seed(seed: int, tag: int) -> int:
    """Independent master seed for a sub-experiment labelled by ``tag``."""
    return mix64(seed ^ mix64(tag + GOLDEN))


def uniform_at(key: int, counter: int) -> float:
    return (mix64(key + (counter + 1) * GOLDEN) >> 11) * _TWO_M53


class RngStream:
    """One reproducible stream of draws, identified by ``(seed, stream)``.

    The stream keeps a cursor; ``uniform_at`` gives random access without
    moving it.
    """

    __slots__ = ("seed", "stream", "counter", "_key")

    def __init__(self, seed: int, stream: int = 0, counter: int = 0):
        if not 0 <= seed <= MASK64 or not 0 <= stream <= MASK64:
            raise ValueError("seed and stream must be unsigned 64-bit integers")
        self.seed = seed
        self.stream = stream
        self.counter = counter
        self._key = stream_key(seed, stream)

    @property
    def key(self) -> int:
        return self._key

    def uniform_at(self, counter: int) -> float:
        return uniform_at(self._key, counter)

    def uniform(self) -> float:
        u = uniform_at(self._key, self.counter)
        self.counter += 1
        return u

    def normal(self) -> float:
        u0 = self.uniform()
        u1 = self.uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u0)) * math.cos(TWO_PI * u1)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream={self.stream}, counter={self.counter})"
