"""Counter-based random streams for reproducible trajectory sampling.

Every chunk of trajectories draws from its own Philox stream, keyed by
(seed, item) with (subround, chunk) placed in the two high counter words.
The map (seed, item, subround, chunk) -> stream is injective and the
streams of distinct chunks are separated by at least 2^128 draws, so
results are a pure function of the inputs regardless of how chunks are
scheduled across workers.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def trajectory_stream(
    seed: int, item: int = 0, subround: int = 0, chunk: int = 0
) -> np.random.Generator:
    """Independent uniform stream for one trajectory chunk.

    ``item`` is the bitstring index within a batch, ``subround`` the
    adaptive-estimation round (0 for one-shot estimates), ``chunk`` the
    trajectory chunk index.
    """
    key = np.array([seed & _MASK64, item & _MASK64], dtype=np.uint64)
    counter = np.array([0, 0, subround & _MASK64, chunk & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
