"""Foundational value types: vocabulary, token sequences, categorical
distributions, and the small set of vector operations everything else is
built from.

All types are immutable after construction and safe to share across
threads. Probabilities are float64 throughout; normalization is checked
to an absolute tolerance of 1e-9, which is ample for sample means of
N ≲ 1e7 draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NORMALIZATION_ATOL = 1e-9


class MclmError(Exception):
    """Base class for all library errors."""


class EmptySampleSet(MclmError):
    """A distribution was requested from zero samples."""


class InvalidCounts(MclmError):
    """Count vector had a negative entry or did not sum to the stated total."""


class VocabMismatch(MclmError):
    """Two objects that must share a vocabulary do not."""


class InvalidSmoothing(MclmError):
    """Smoothing weight outside [0, 1]."""


def as_token_array(ids: Sequence[int] | np.ndarray) -> np.ndarray:
    """Normalize a token sequence to a contiguous int32 array."""
    arr = np.asarray(ids, dtype=np.int32)
    if arr.ndim != 1:
        raise ValueError(f"token sequence must be 1-d, got shape {arr.shape}")
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class Vocabulary:
    """Ordered, bijective token <-> index mapping over a finite symbol set."""

    symbols: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.symbols) < 2:
            raise ValueError("vocabulary needs at least 2 symbols")
        index = {s: i for i, s in enumerate(self.symbols)}
        if len(index) != len(self.symbols):
            raise ValueError("vocabulary symbols must be distinct")
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        return self._index[symbol]

    def encode(self, text: Iterable[str]) -> np.ndarray:
        return as_token_array([self._index[ch] for ch in text])

    def decode(self, ids: Sequence[int] | np.ndarray) -> str:
        return "".join(self.symbols[i] for i in ids)

    def validate_ids(self, ids: np.ndarray) -> None:
        if ids.size and (ids.min() < 0 or ids.max() >= self.size):
            raise ValueError("token id out of vocabulary range")


#: A token sequence is plain data: a 1-d int32 array of vocabulary indices.
TokenSequence = np.ndarray


@dataclass(frozen=True)
class OneHotSample:
    """A single sampled token, viewed as an indicator over the vocabulary."""

    index: int

    def as_vector(self, vocab_size: int) -> np.ndarray:
        if not 0 <= self.index < vocab_size:
            raise ValueError("sample index out of range")
        v = np.zeros(vocab_size)
        v[self.index] = 1.0
        return v


@dataclass(frozen=True)
class CategoricalDistribution:
    """Probability vector over a vocabulary (float64, validated on build)."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64, copy=True, order="C")
        if p.ndim != 1 or p.shape[0] < 1:
            raise ValueError("probability vector must be 1-d and nonempty")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(float(p.sum()) - 1.0) > NORMALIZATION_ATOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @property
    def size(self) -> int:
        return self.probs.shape[0]

    def cdf(self) -> np.ndarray:
        """Inclusive left-to-right cumulative sums (the sampling CDF)."""
        return np.cumsum(self.probs)

    def __getitem__(self, v: int) -> float:
        return float(self.probs[v])


def dist_from_counts(
    counts: Sequence[int] | np.ndarray, total: int
) -> CategoricalDistribution:
    """Sample-mean distribution from integer tallies: probs[v] = counts[v]/total."""
    c = np.asarray(counts, dtype=np.int64)
    if total == 0:
        raise EmptySampleSet("cannot form a distribution from zero samples")
    if total < 0 or np.any(c < 0):
        raise InvalidCounts("counts and total must be nonnegative")
    if int(c.sum()) != total:
        raise InvalidCounts(f"counts sum to {int(c.sum())}, stated total is {total}")
    return CategoricalDistribution(c / float(total))


def sup_norm_distance(
    a: CategoricalDistribution, b: CategoricalDistribution
) -> float:
    """max_v |a[v] - b[v]| — the convergence criterion used throughout."""
    if a.size != b.size:
        raise VocabMismatch(f"distribution sizes differ: {a.size} vs {b.size}")
    return float(np.max(np.abs(a.probs - b.probs)))


def smooth(d: CategoricalDistribution, eta: float) -> CategoricalDistribution:
    """Mix with the uniform distribution: (1-eta)*d + eta/|V|.

    Guards log(0) when a gold token received zero Monte-Carlo mass. eta=0
    is the identity; eta=1 is fully uniform. Never moves any component
    below eta/|V| or above (1-eta) + eta/|V|.
    """
    if not 0.0 <= eta <= 1.0:
        raise InvalidSmoothing(f"eta must be in [0, 1], got {eta}")
    if eta == 0.0:
        return d
    return CategoricalDistribution((1.0 - eta) * d.probs + eta / d.size)
