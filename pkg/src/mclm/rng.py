"""Deterministic 64-bit stream seeding shared by every sampler implementation.

The whole toolkit promises bit-exact reproducibility across the compiled
kernel, the numpy fallback, and out-of-process generator adapters, so the
random stream is pinned down here once and for all:

* The stream is counter-based (splitmix64): draw ``i`` (0-based) from seed
  ``s`` is ``mix64((s + (i + 1) * GAMMA) mod 2**64)``.
* Draws map to floats in [0, 1) by taking the top 53 bits:
  ``(x >> 11) * 2**-53``. Both steps are exact in IEEE double.
* Skipping ``k`` draws is therefore just re-seeding with
  ``stream_skip(s, k) = (s + k * GAMMA) mod 2**64``. Request batching and
  parallel sharding rely on this to be indistinguishable from one
  uninterrupted stream.
* Independent streams (one per evaluation position) come from
  ``derive_seed(global_seed, position)``.

Any peer process that wants byte-identical samples must implement exactly
these definitions; they only need 64-bit unsigned arithmetic.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB

#: Float scale for the top 53 bits of a 64-bit draw.
FLOAT_SCALE = 2.0**-53

#: Default global seed used by the CLI when --seed is not given.
DEFAULT_SEED = 1729


def mix64(z: int) -> int:
    """splitmix64 finalizer; bijective on 64-bit words."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *words: int) -> int:
    """Mix extra words (e.g. an evaluation position) into a stream seed.

    Each step is bijective in the incoming word, so distinct positions get
    distinct, well-separated streams.
    """
    h = mix64(seed & MASK64)
    for w in words:
        h = mix64(((h ^ (w & MASK64)) * GAMMA) & MASK64)
    return h


def stream_skip(seed: int, offset: int) -> int:
    """Seed whose stream equals draws offset, offset+1, ... of ``seed``'s."""
    return (seed + offset * GAMMA) & MASK64


def stream_u64(seed: int, index: int) -> int:
    """Draw ``index`` (0-based) of the stream as a 64-bit word."""
    return mix64((seed + (index + 1) * GAMMA) & MASK64)


def stream_float(seed: int, index: int) -> float:
    """Draw ``index`` of the stream as a float in [0, 1)."""
    return (stream_u64(seed, index) >> 11) * FLOAT_SCALE


def stream_floats(seed: int, count: int) -> np.ndarray:
    """Draws 0..count-1 of the stream as a float64 array (vectorized).

    Bit-identical to ``stream_float`` applied elementwise; uint64 numpy
    arithmetic wraps exactly like the scalar path's masking.
    """
    if count <= 0:
        return np.empty(0)
    idx = np.arange(1, count + 1, dtype=np.uint64)
    z = np.uint64(seed & MASK64) + idx * np.uint64(GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * FLOAT_SCALE


class SplitMix64:
    """Stateful view of the counter-based stream (scalar, pure Python)."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def next_float(self) -> float:
        return (self.next_u64() >> 11) * FLOAT_SCALE
