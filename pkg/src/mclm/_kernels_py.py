"""Pure numpy implementation of the sampling kernel.

Mirrors ``_kernels.pyx`` exactly; see ``kernels`` for how one of the two
gets picked at import time. All integer work is done on uint64 arrays,
where numpy wraps on overflow just like the C code does.
"""

from __future__ import annotations

import numpy as np

from .rng import GAMMA, FLOAT_SCALE

_GAMMA = np.uint64(GAMMA)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)

IMPL = "python"


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _MUL1
    z = (z ^ (z >> _S27)) * _MUL2
    return z ^ (z >> _S31)


def sample_tokens(cdf: np.ndarray, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` token ids from the distribution given by ``cdf``.

    ``cdf`` is the inclusive left-to-right cumulative sum of the
    probability vector (float64, last entry ~1.0). Draw ``i`` uses stream
    value ``i`` of ``seed`` and selects the first index whose cdf weakly
    exceeds it; draws beyond the final cdf entry (possible when rounding
    leaves it slightly under 1) fall into the last bucket.
    """
    if count <= 0:
        return np.empty(0, dtype=np.int32)
    cdf = np.ascontiguousarray(cdf, dtype=np.float64)
    idx = np.arange(1, count + 1, dtype=np.uint64)
    states = np.uint64(seed & ((1 << 64) - 1)) + idx * _GAMMA
    u = (_mix64(states) >> _S11).astype(np.float64) * FLOAT_SCALE
    tokens = np.searchsorted(cdf, u, side="left")
    np.minimum(tokens, len(cdf) - 1, out=tokens)
    return tokens.astype(np.int32)


def accumulate_counts(
    cdf: np.ndarray, count: int, seed: int, counts: np.ndarray
) -> None:
    """Sample ``count`` tokens and add their tallies into ``counts`` (int64)."""
    tokens = sample_tokens(cdf, count, seed)
    counts += np.bincount(tokens, minlength=counts.shape[0]).astype(np.int64)
