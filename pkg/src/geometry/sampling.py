"""
Uniform sampling in the unit square from seeded, counter-based streams.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from errors import DomainError


@dataclass(frozen=True)
class Point:
    """A point of the unit square [0,1]^2."""

    x: float
    y: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise DomainError(f"point ({self.x}, {self.y}) is outside the unit square")

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)


def substream(seed: int, *key: int) -> np.random.Generator:
    """
    Independent stream for (seed, key...).

    Philox is counter-based, so every key path gets its own stream no matter
    which worker draws it or in what order.
    """
    if seed < 0:
        raise DomainError(f"seed must be non-negative, got {seed}")
    if any(k < 0 for k in key):
        raise DomainError(f"stream key must be non-negative, got {key}")
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def sample_positions(n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n points uniformly in the unit square; returns an (n, 2) array."""
    if n < 0:
        raise DomainError(f"vertex count must be non-negative, got {n}")
    return rng.random((n, 2))
