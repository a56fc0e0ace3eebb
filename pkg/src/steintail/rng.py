"""Counter-based random streams with reproducible block decomposition.

Draws come from Philox generators keyed by (seed, block_index), so block b of a
stream is computable without generating blocks 0..b-1.  Assembling blocks by
index makes the output independent of the order in which blocks are produced,
which is what guarantees byte-identical results under parallel execution.
"""

from __future__ import annotations

import numpy as np

BLOCK_SIZE = 1 << 16


def _block_generator(seed: int, block_index: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, block_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def n_blocks(n: int, block_size: int = BLOCK_SIZE) -> int:
    return (n + block_size - 1) // block_size


def uniform_block(seed: int, block_index: int, size: int) -> np.ndarray:
    """Uniforms on (0, 1); the open left endpoint keeps inverse CDFs finite."""
    u = _block_generator(seed, block_index).random(size)
    tiny = 2.0 ** -53
    return np.where(u == 0.0, tiny, u)


def normal_block(seed: int, block_index: int, size: int) -> np.ndarray:
    return _block_generator(seed, block_index).standard_normal(size)


def _assemble(block_fn, seed: int, n: int, block_size: int) -> np.ndarray:
    out = np.empty(n)
    for b in range(n_blocks(n, block_size)):
        lo = b * block_size
        hi = min(lo + block_size, n)
        out[lo:hi] = block_fn(seed, b, hi - lo)
    return out


def uniform_stream(seed: int, n: int, block_size: int = BLOCK_SIZE) -> np.ndarray:
    return _assemble(uniform_block, seed, n, block_size)


def normal_stream(seed: int, n: int, block_size: int = BLOCK_SIZE) -> np.ndarray:
    return _assemble(normal_block, seed, n, block_size)
