"""Deterministic random streams built on counter-based Philox generators.

Streams are keyed by (seed, block index) with a fixed block size, so batches
may be evaluated serially or in parallel, in any order, with identical
results.
"""

from __future__ import annotations

import numpy as np

BLOCK_SIZE = 4096
_MASK64 = (1 << 64) - 1


def block_generator(seed: int, block_index: int) -> np.random.Generator:
    """Independent generator for one block of a seeded stream."""
    key = np.array([seed & _MASK64, block_index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_generator(seed: int, sample_index: int) -> np.random.Generator:
    """Independent generator for a single indexed sample."""
    return block_generator(seed, sample_index)


def blocks(n_samples: int, block_size: int = BLOCK_SIZE):
    """Yield (block_index, count) covering n_samples."""
    full, rest = divmod(n_samples, block_size)
    for b in range(full):
        yield b, block_size
    if rest:
        yield full, rest


def uniform_ball(gen: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
    """Uniform draws from the dim-dimensional ball of the given radius,
    shape (count, dim)."""
    x = gen.standard_normal((count, dim))
    norms = np.linalg.norm(x, axis=1)
    norms[norms == 0.0] = 1.0
    r = radius * gen.random(count) ** (1.0 / dim)
    return x * (r / norms)[:, None]


def unit_vector(gen: np.random.Generator, dim: int) -> np.ndarray:
    """Single uniform draw from the unit sphere."""
    while True:
        x = gen.standard_normal(dim)
        n = np.linalg.norm(x)
        if n > 1e-12:
            return x / n
