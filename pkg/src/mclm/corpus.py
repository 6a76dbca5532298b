"""Character corpus ingestion: the text8-style 27-symbol charset and the
standard 90/5/5 split.

The vocabulary order is fixed — 'a'..'z' then space at index 26 — and
load-time validation rejects any other byte. Protocol handshakes and
frozen regression values depend on this index assignment, so it is not
configurable.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import MclmError, TokenSequence, Vocabulary
from .rng import SplitMix64, derive_seed, stream_floats

TEXT8_SYMBOLS: tuple[str, ...] = tuple("abcdefghijklmnopqrstuvwxyz") + (" ",)
TEXT8_VOCAB = Vocabulary(TEXT8_SYMBOLS)

_SPACE_ID = 26


class CorpusFormatError(MclmError):
    """A byte outside the 27-symbol charset; carries its offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(message)
        self.offset = offset


class EmptyCorpus(MclmError):
    """The corpus file holds no characters."""


class SubsetTooLarge(MclmError):
    """More positions requested than the split holds."""


@dataclass(frozen=True)
class Splits:
    """Train/validation/test views in 90/5/5 proportion.

    Boundaries are exact integer offsets: floor(0.9 n) for train,
    floor(0.05 n) for validation, remainder test; concatenating the three
    gives back the full sequence.
    """

    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray

    def by_name(self, name: str) -> np.ndarray:
        if name not in ("train", "validation", "test"):
            raise ValueError(f"unknown split {name!r}")
        return getattr(self, name)


@dataclass(frozen=True)
class CharCorpus:
    vocab: Vocabulary
    data: TokenSequence
    splits: Splits

    def decode(self) -> str:
        return self.vocab.decode(self.data)


_BYTE_TO_ID = np.full(256, -1, dtype=np.int16)
for _i, _ch in enumerate(TEXT8_SYMBOLS):
    _BYTE_TO_ID[ord(_ch)] = _i


def tokenize_text(text: str | bytes) -> np.ndarray:
    """Map a 27-charset string to token ids, rejecting anything else."""
    raw = text.encode("ascii", errors="replace") if isinstance(text, str) else text
    arr = np.frombuffer(raw, dtype=np.uint8)
    ids = _BYTE_TO_ID[arr]
    bad = np.flatnonzero(ids < 0)
    if bad.size:
        off = int(bad[0])
        raise CorpusFormatError(
            f"disallowed byte 0x{raw[off]:02x} at offset {off} "
            "(corpus must be 'a'-'z' and space only)",
            offset=off,
        )
    return ids.astype(np.int32)


def split_bounds(n: int) -> tuple[int, int]:
    """(train_end, validation_end) offsets of the 90/5/5 split."""
    train_end = n * 90 // 100
    validation_end = train_end + n * 5 // 100
    return train_end, validation_end


def load_char_corpus(path: str | Path) -> CharCorpus:
    """Load and split a raw character file over the fixed 27-symbol set."""
    raw = Path(path).read_bytes()
    if not raw:
        raise EmptyCorpus(f"{path}: empty corpus file")
    data = tokenize_text(raw)
    train_end, validation_end = split_bounds(len(data))
    splits = Splits(
        train=data[:train_end],
        validation=data[train_end:validation_end],
        test=data[validation_end:],
    )
    return CharCorpus(vocab=TEXT8_VOCAB, data=data, splits=splits)


def sample_positions(
    corpus: CharCorpus, split: str, count: int, seed: int
) -> list[tuple[np.ndarray, int]]:
    """Uniformly sample distinct evaluation positions from a split.

    A position t is valid when it has at least one token of history
    within the split (t >= 1); each result pairs the position with its
    full in-split gold prefix. Deterministic per seed: a partial
    Fisher-Yates shuffle driven by the library's own stream, so the
    exhaustive case (count = split length - 1) is all positions in
    shuffled order.
    """
    ids = corpus.splits.by_name(split)
    n_valid = len(ids) - 1
    if count > n_valid:
        raise SubsetTooLarge(
            f"asked for {count} positions, split {split!r} has {n_valid}"
        )
    if count < 0:
        raise ValueError("count must be >= 0")
    positions = np.arange(1, len(ids), dtype=np.int64)
    rng = SplitMix64(seed)
    for i in range(count):
        j = i + min(int(rng.next_float() * (n_valid - i)), n_valid - i - 1)
        positions[i], positions[j] = positions[j], positions[i]
    return [(ids[:t], int(t)) for t in positions[:count]]


def generate_demo_text(length: int, seed: int) -> str:
    """Deterministic synthetic corpus with order-2 character structure.

    Stands in for a real 100M-character corpus at desk scale: a fixed
    pseudo-random order-2 chain over the 27 symbols (sharpened so its
    entropy rate sits well below log2 27, with spaces common enough to
    give word texture) is rolled out for `length` characters. Same
    (length, seed) -> same text, on every platform.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    v = len(TEXT8_SYMBOLS)

    # Transition table: context code c = 27*prev2 + prev1 -> prob row.
    rows = np.empty((v * v, v))
    for c in range(v * v):
        u = stream_floats(derive_seed(seed, 7, c), v)
        w = u**4  # sharpen: most mass on a few successors per context
        w[_SPACE_ID] = max(w[_SPACE_ID], 0.35 * float(u[_SPACE_ID]))
        rows[c] = w / w.sum()
    cdfs = np.cumsum(rows, axis=1)

    out = np.empty(length, dtype=np.int32)
    uniforms = stream_floats(derive_seed(seed, 11), length)
    prev2, prev1 = 0, _SPACE_ID  # fixed warm start: "a "
    for t in range(length):
        idx = int(np.searchsorted(cdfs[prev2 * v + prev1], uniforms[t], side="left"))
        idx = min(idx, v - 1)
        out[t] = idx
        prev2, prev1 = prev1, idx
    return TEXT8_VOCAB.decode(out)
