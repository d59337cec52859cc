"""Counter-based random streams.

Every random draw in the package comes from ``generator(seed, stream)``:
a Philox generator keyed by the run seed and a stream id, so the values a
task sees do not depend on how tasks are scheduled across workers.
"""
import numpy as np


def generator(seed: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed), int(stream)])
    return np.random.Generator(np.random.Philox(ss))


def stream_id(*parts) -> int:
    """Stable integer id for a tuple of numbers (e.g. a mass pair)."""
    h = 1469598103934665603
    for p in parts:
        for b in repr(float(p)).encode():
            h = ((h ^ b) * 1099511628211) % (1 << 63)
    return h
