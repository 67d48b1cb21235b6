"""
Seeded, counter-based pseudorandom streams.

Every consumer of randomness gets its own stream keyed by (seed, stream id), so
dataset generation, parameter initialization and mini-batch shuffling never
share draws even when they share a seed.
"""
from enum import IntEnum
from typing import Tuple, Union

import numpy as np

from onebit_unfold.core.exceptions import ConfigurationError
from onebit_unfold.numerics.linalg import FloatArray, IndexArray

Shape = Union[int, Tuple[int, ...]]

MAX_SEED = 2**64 - 1


def offset_seed(seed: int, offset: int) -> int:
    """seed + offset, wrapped into the unsigned 64-bit range."""
    return (int(seed) + int(offset)) % (MAX_SEED + 1)


class Stream(IntEnum):
    """Stream identifiers for the independent random streams of a run."""

    DATA = 0
    HOLDOUT = 1
    PARAM_INIT = 2
    SHUFFLE = 3


class SeededRng:
    """Philox-backed generator; identical (seed, stream) gives an identical draw sequence."""

    def __init__(self, seed: int, stream: int = Stream.DATA):
        if not 0 <= seed <= MAX_SEED:
            raise ConfigurationError(
                f"seed must be an unsigned 64-bit integer, got {seed}", details={"seed": seed}
            )
        self.seed = int(seed)
        self.stream = int(stream)
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self._generator = np.random.Generator(np.random.Philox(key=key))

    def spawn(self, worker_index: int) -> "SeededRng":
        """Independent generator for a parallel worker: seed = master seed + index."""
        return SeededRng(offset_seed(self.seed, worker_index), self.stream)

    def uniform(self, size: Shape) -> FloatArray:
        """Uniform draws on [0, 1)."""
        return self._generator.random(size)

    def standard_normal(self, size: Shape) -> FloatArray:
        """Standard normal draws via the Box-Muller transform."""
        shape = (size,) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape, dtype=np.int64))
        pairs = (count + 1) // 2
        u1 = self._generator.random(pairs)
        u2 = self._generator.random(pairs)
        # 1 - u1 lies in (0, 1], keeping the log finite
        radius = np.sqrt(-2.0 * np.log1p(-u1))
        angle = 2.0 * np.pi * u2
        z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
        return z[:count].reshape(shape)

    def normal(self, size: Shape, std: float = 1.0) -> FloatArray:
        return std * self.standard_normal(size)

    def choice_without_replacement(self, n: int, k: int) -> IndexArray:
        """k distinct indices from range(n), uniformly, in ascending order."""
        return np.sort(self._generator.choice(n, size=k, replace=False))

    def permutation(self, n: int) -> IndexArray:
        return self._generator.permutation(n)
