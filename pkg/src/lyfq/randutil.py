"""Seeded, splittable random streams and the samplers built on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# 1 followed by primes: square roots of these are linearly independent over Q
RADICANDS = (1, 2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71)


@dataclass
class SeededStream:
    """Reproducible stream ``(seed, stream_id)`` over a counter-based Philox generator.

    Different ``stream_id`` values give statistically independent streams for the
    same seed, so workers can each own one.
    """

    seed: int = 0
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        self._gen = np.random.Generator(np.random.Philox(ss))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def spawn(self, stream_id: int) -> "SeededStream":
        return SeededStream(self.seed, stream_id)

    # thin delegation keeps call sites short
    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def permutation(self, x):
        return self._gen.permutation(x)


def as_generator(rng) -> np.random.Generator:
    """Accept a SeededStream, a Generator or an int seed."""
    if isinstance(rng, SeededStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    return SeededStream(0 if rng is None else int(rng)).generator


def haar_unitary(n: int, stream=None) -> np.ndarray:
    """Haar-distributed ``n x n`` unitary via QR of a complex Ginibre matrix."""
    if n < 1:
        raise ValueError("n must be positive")
    g = as_generator(stream)
    z = (g.standard_normal((n, n)) + 1j * g.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))[None, :]


def q_independent_direction(n: int, scale: float = 1.0, stream=None) -> np.ndarray:
    """``scale * (1, sqrt 2, sqrt 3, sqrt 5, ...)`` with entry order permuted by ``stream``.

    The entries are linearly independent over the rationals by construction;
    floating point cannot certify this.
    """
    if not 1 <= n <= len(RADICANDS):
        raise ValueError(f"n must be in 1..{len(RADICANDS)}")
    p = np.array(RADICANDS[:n], dtype=float)
    if stream is not None:
        p = as_generator(stream).permutation(p)
    v = np.sqrt(p)
    return scale * v
