"""Counter-based random streams keyed by (base_seed, stream, replica_id).

Every replica draws from its own Philox stream, so a replica's randomness
does not depend on which worker evaluates it or in what order.
"""

from __future__ import annotations

import numpy as np

# stream tags; distinct tags give statistically independent substreams
STREAM_ADJACENCY = 0
STREAM_ROW_RESAMPLE = 1
STREAM_INIT = 2

_MASK64 = (1 << 64) - 1


def replica_generator(base_seed: int, replica_id: int, stream: int = STREAM_ADJACENCY) -> np.random.Generator:
    if not 0 <= base_seed <= _MASK64:
        raise ValueError(f"base_seed must be a 64-bit unsigned integer, got {base_seed}")
    if replica_id < 0:
        raise ValueError(f"replica_id must be nonnegative, got {replica_id}")
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(stream, replica_id))
    return np.random.Generator(np.random.Philox(seq))
