"""
Reproducible random streams

All randomness flows from one per-run seed. Each consumer asks for its own
stream key, so results do not depend on call order or thread scheduling.
"""

import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """
    Build a counter-based generator for one named stream

    Args:
        seed: Run seed (non-negative integer)
        *stream: Integer path identifying the consumer (e.g. member index, shard)

    Returns:
        numpy Generator backed by Philox
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(sequence))


# Stream keys used across the package
STREAM_INIT = 1
STREAM_SAMPLE = 2
STREAM_SHUFFLE = 3
STREAM_SPLIT = 4
STREAM_ORACLE = 5
