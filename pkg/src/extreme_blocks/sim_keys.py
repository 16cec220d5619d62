"""Keying scheme for reproducible, splittable random streams.

Each logical stream is a Philox counter-based generator keyed by the pair
(seed, tag): the user seed occupies the high 64 bits of the 128-bit key and
the tag the low 64. Tags 0, 1, 2, ... index cliques; the radial Pareto
stream uses a reserved high tag so it can never collide with a clique
index. Draw indices advance the Philox counter, so a stream's output is a
pure function of (seed, tag, draw index) independent of scheduling.
"""

from __future__ import annotations

import numpy as np

PARETO_STREAM_TAG = 1 << 62


def philox_stream(seed: int, tag: int) -> np.random.Generator:
    key = ((int(seed) & ((1 << 64) - 1)) << 64) | (int(tag) & ((1 << 64) - 1))
    return np.random.Generator(np.random.Philox(key=key))
