"""
Counter-based random streams.

Every random draw in the toolkit comes from a Philox generator keyed by a
root seed plus an integer path (stream kind, component, block or replicate
index). Two calls with the same path always see the same numbers, whatever
order or thread they run in.
"""

import numpy as np

# stream kinds
SAMPLE = 0
BOOTSTRAP = 1
REPETITION = 2
CONDITIONS = 3

BLOCK_SIZE = 64


def _sequence(seed, keys):
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))


def stream(seed, *keys):
    """Generator for the stream addressed by ``(seed, *keys)``."""
    return np.random.Generator(np.random.Philox(_sequence(seed, keys)))


def derive_seed(seed, *keys):
    """Integer child seed, e.g. the seed of repetition ``r`` of a coverage run."""
    return int(_sequence(seed, keys).generate_state(1, dtype=np.uint32)[0])


def blocks(total, size=BLOCK_SIZE):
    """Fixed ``(index, start, stop)`` partition of ``range(total)``."""
    return [(b, start, min(start + size, total)) for b, start in enumerate(range(0, total, size))]
