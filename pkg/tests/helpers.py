"""Shared test utilities.

The ``ref_*`` functions are an independent reference implementation of
the documented stream/sampling contract, written from the definitions in
plain Python (linear CDF scan, no numpy, no library imports). Library
kernels must match them bit-for-bit; frozen regression values in the
tests were produced by this reference.
"""

from __future__ import annotations

import numpy as np

M64 = (1 << 64) - 1
REF_GAMMA = 0x9E3779B97F4A7C15


def ref_mix64(z: int) -> int:
    z &= M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return z ^ (z >> 31)


def ref_stream_u64(seed: int, index: int) -> int:
    return ref_mix64((seed + (index + 1) * REF_GAMMA) & M64)


def ref_stream_float(seed: int, index: int) -> float:
    return (ref_stream_u64(seed, index) >> 11) * 2.0**-53


def ref_derive_seed(seed: int, *words: int) -> int:
    h = ref_mix64(seed & M64)
    for w in words:
        h = ref_mix64(((h ^ (w & M64)) * REF_GAMMA) & M64)
    return h


def ref_sample_tokens(probs, count: int, seed: int) -> list[int]:
    """Inverse-CDF sampling by linear scan: first index whose cumulative
    weakly exceeds the draw, last index as the fall-through."""
    cdf = []
    acc = 0.0
    for p in probs:
        acc += p
        cdf.append(acc)
    out = []
    for i in range(count):
        u = ref_stream_float(seed, i)
        chosen = len(cdf) - 1
        for v, c in enumerate(cdf):
            if c >= u:
                chosen = v
                break
        out.append(chosen)
    return out


class DeterministicGenerator:
    """Always emits the same token; the degenerate analytic oracle."""

    def __init__(self, vocab, token: int):
        self.vocabulary = vocab
        self.token = token

    def sample_next(self, prefix, count, seed):
        return np.full(count, self.token, dtype=np.int32)

    @property
    def supports_true_dist(self) -> bool:
        return True

    def true_next_dist(self, prefix):
        from mclm.core import CategoricalDistribution

        probs = np.zeros(self.vocabulary.size)
        probs[self.token] = 1.0
        return CategoricalDistribution(probs)

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        pass


class RecordingGenerator:
    """Uniform sampler that remembers every prefix it was asked about."""

    def __init__(self, inner):
        self.inner = inner
        self.vocabulary = inner.vocabulary
        self.prefixes: list[np.ndarray] = []

    def sample_next(self, prefix, count, seed):
        self.prefixes.append(np.array(prefix, copy=True))
        return self.inner.sample_next(prefix, count, seed)

    @property
    def supports_true_dist(self) -> bool:
        return self.inner.supports_true_dist

    def true_next_dist(self, prefix):
        self.prefixes.append(np.array(prefix, copy=True))
        return self.inner.true_next_dist(prefix)


def markov_entropy_rate(model) -> float:
    """Conditional entropy rate of an order-1 chain, in bits:
    H = -sum_c pi(c) sum_v p(v|c) log2 p(v|c), with pi the stationary
    distribution found by power iteration."""
    assert model.order == 1
    v = model.vocab_size
    P = np.empty((v, v))
    for c in range(v):
        P[c] = model.next_probs(np.array([c], dtype=np.int32))
    pi = np.full(v, 1.0 / v)
    for _ in range(10_000):
        nxt = pi @ P
        if np.max(np.abs(nxt - pi)) < 1e-14:
            pi = nxt
            break
        pi = nxt
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(P > 0, np.log2(np.where(P > 0, P, 1.0)), 0.0)
    return float(-(pi[:, None] * P * logs).sum())


def random_dist(rnd: np.random.Generator, size: int) -> np.ndarray:
    w = rnd.random(size) + 1e-12
    return w / w.sum()
