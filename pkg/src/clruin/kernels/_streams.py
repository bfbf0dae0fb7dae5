"""Per-path random substreams shared by both kernel backends."""

import numpy as np

#: claims consumed per block; a block draws BLOCK interarrival uniforms
#: followed by BLOCK * uniforms_per_claim severity uniforms
BLOCK = 256

_MASK64 = (1 << 64) - 1


def path_key(seed: int, path: int) -> int:
    return ((seed & _MASK64) << 64) | (path & _MASK64)


def path_bitgen(seed: int, path: int) -> np.random.Philox:
    """Counter-based generator for path ``path``; independent of scheduling."""
    return np.random.Philox(key=path_key(seed, path))
