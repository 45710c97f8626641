"""Counter-based deterministic randomness."""
from __future__ import annotations

import numpy as np

from ..errors import BadRate

_MASK64 = (1 << 64) - 1


def counter_rng(seed: int, counter: int = 0) -> np.random.Generator:
    """Philox generator keyed by ``(seed, counter)``; draw ``i`` depends only on the key and ``i``."""
    key = (int(seed) & _MASK64) | ((int(counter) & _MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def dropout_mask(n: int, rate: float, seed: int, epoch: int = 0) -> np.ndarray:
    """Boolean keep-mask for ``n`` edges; edge ``i`` survives with probability ``1 - rate``."""
    if not 0.0 <= rate < 1.0:
        raise BadRate(f"dropout rate must lie in [0, 1), got {rate}")
    if rate == 0.0:
        return np.ones(n, dtype=bool)
    return counter_rng(seed, epoch).random(n) >= rate


def dropout_edges(edge_list, rate: float, seed: int, epoch: int = 0) -> list:
    keep = dropout_mask(len(edge_list), rate, seed, epoch)
    return [e for e, k in zip(edge_list, keep) if k]
