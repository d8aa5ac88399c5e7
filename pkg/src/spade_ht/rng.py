"""Counter-based random streams.

Every stream is a Philox generator keyed by ``SeedSequence(seed, spawn_key)``.
Repetitions are grouped in fixed-size blocks and each block gets its own
stream, so a batch is the same whether blocks run serially or on a pool.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

BLOCK_SIZE = 8192


def substream(seed: int, key: Sequence[int] = ()) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def blocks(repetitions: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    """(start, stop) index pairs covering ``range(repetitions)``."""
    return [(lo, min(lo + block_size, repetitions))
            for lo in range(0, repetitions, block_size)]


def run_blocks(
    seed: int,
    key: Sequence[int],
    repetitions: int,
    draw: Callable[[np.random.Generator, int], np.ndarray],
    workers: int = 1,
) -> np.ndarray:
    """Call ``draw(rng, size)`` once per block and concatenate along axis 0.

    The output depends only on (seed, key, repetitions); ``workers`` only
    changes scheduling.
    """
    spans = blocks(repetitions)
    if not spans:
        return np.asarray(draw(substream(seed, (*key, 0)), 0))

    def one(i: int) -> np.ndarray:
        lo, hi = spans[i]
        return draw(substream(seed, (*key, i)), hi - lo)

    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(len(spans))))
    else:
        parts = [one(i) for i in range(len(spans))]
    return np.concatenate(parts, axis=0)
