"""Monte-Carlo estimation of a generator's next-token distribution.

One estimate is the mean of N one-hot samples. Internally the state is
the integer count vector, not a running floating mean: counts are exact,
merge associatively across parallel shards, and the distribution is
derived on demand. Because a generator's sample stream is counter-based
(see ``generators``), the first N samples of one long call, the
concatenation of skip-ahead shards, and a sequential run all produce the
identical count vector.
"""

from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import CategoricalDistribution, MclmError, TokenSequence, dist_from_counts
from .generators import GeneratorError, GeneratorHandle
from .rng import stream_skip


@dataclass(frozen=True)
class StepEstimate:
    """Estimated next-token distribution at one evaluation position."""

    position: int
    n_used: int
    counts: np.ndarray  # int64 tallies; sum == n_used

    @cached_property
    def dist(self) -> CategoricalDistribution:
        """The sample-mean distribution (components are multiples of 1/N)."""
        return dist_from_counts(self.counts, self.n_used)


@dataclass(frozen=True)
class ConvergenceCurve:
    """Consecutive-snapshot sup-norm errors along one sample stream.

    ``errors[i]`` is the sup-norm distance between the estimates at
    ``ns[i] - alpha`` and ``ns[i]`` samples; ``ns`` runs over
    2*alpha, 3*alpha, ... in steps of alpha.
    """

    alpha: int
    ns: np.ndarray  # int64, strictly increasing, step alpha
    errors: np.ndarray  # float64 in [0, 1]

    @property
    def points(self) -> list[tuple[int, float]]:
        return [(int(n), float(e)) for n, e in zip(self.ns, self.errors)]


def _checked_counts(
    gen: GeneratorHandle, prefix: TokenSequence, count: int, seed: int, position: int
) -> np.ndarray:
    try:
        tokens = gen.sample_next(prefix, count, seed)
    except MclmError:
        raise
    except Exception as e:  # wrap foreign failures with position context
        raise GeneratorError(f"generator failed at position {position}: {e}") from e
    vocab_size = gen.vocabulary.size
    counts = np.bincount(tokens, minlength=vocab_size).astype(np.int64)
    if counts.shape[0] > vocab_size:
        raise GeneratorError(
            f"generator emitted out-of-vocabulary token at position {position}"
        )
    return counts


def _shard_sizes(n: int, shards: int) -> list[int]:
    base, extra = divmod(n, shards)
    return [base + 1] * extra + [base] * (shards - extra)


def approximate_step(
    gen: GeneratorHandle,
    prefix: TokenSequence,
    n: int,
    seed: int,
    *,
    position: int = 0,
    shards: int = 1,
    executor: Executor | None = None,
) -> StepEstimate:
    """Estimate the next-token distribution from n samples.

    With ``shards > 1`` the n draws are split into contiguous ranges;
    the shard at stream offset o samples under seed ``stream_skip(seed, o)``
    and the count vectors are summed. Output is bit-identical for every
    shard count, with or without an executor.
    """
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    if shards < 1:
        raise ValueError(f"shards must be >= 1, got {shards}")
    shards = min(shards, n)
    if shards == 1:
        counts = _checked_counts(gen, prefix, n, seed, position)
        return StepEstimate(position=position, n_used=n, counts=counts)

    sizes = _shard_sizes(n, shards)
    offsets = np.concatenate(([0], np.cumsum(sizes[:-1])))
    jobs = [
        (int(size), stream_skip(seed, int(off)))
        for size, off in zip(sizes, offsets)
        if size > 0
    ]
    if executor is None:
        parts = [
            _checked_counts(gen, prefix, size, s, position) for size, s in jobs
        ]
    else:
        futures = [
            executor.submit(_checked_counts, gen, prefix, size, s, position)
            for size, s in jobs
        ]
        parts = [f.result() for f in futures]
    counts = np.sum(parts, axis=0, dtype=np.int64)
    return StepEstimate(position=position, n_used=n, counts=counts)


def approximate_curve(
    gen: GeneratorHandle,
    prefix: TokenSequence,
    n_max: int,
    alpha: int,
    seed: int,
    *,
    position: int = 0,
) -> ConvergenceCurve:
    """Trace estimate movement along one nested sample stream.

    Keeps a single running count over one stream, snapshots every alpha
    samples, and reports the sup-norm change between consecutive
    snapshots. The snapshot at N is exactly the estimate the first N
    samples would give (the nested-sequence identity).
    """
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    if n_max < 2 * alpha:
        raise ValueError(f"n_max must be >= 2*alpha, got {n_max} < {2 * alpha}")
    n_snapshots = n_max // alpha
    total = n_snapshots * alpha
    vocab_size = gen.vocabulary.size

    # Snapshot distributions are produced in blocks so memory stays
    # O(block x |V|) even for very large vocabularies.
    block_rows = max(1, min(n_snapshots, 4_000_000 // vocab_size))
    running = np.zeros(vocab_size, dtype=np.int64)
    prev_dist: np.ndarray | None = None
    errors = np.empty(n_snapshots - 1, dtype=np.float64)
    done = 0  # snapshots consumed so far

    offset = 0
    while done < n_snapshots:
        rows = min(block_rows, n_snapshots - done)
        tokens = gen.sample_next(
            prefix, rows * alpha, stream_skip(seed, offset)
        )
        if tokens.size and (tokens.min() < 0 or tokens.max() >= vocab_size):
            raise GeneratorError(
                f"generator emitted out-of-vocabulary token at position {position}"
            )
        codes = (
            np.repeat(np.arange(rows, dtype=np.int64), alpha) * vocab_size
            + tokens.astype(np.int64)
        )
        block_counts = np.bincount(codes, minlength=rows * vocab_size).reshape(
            rows, vocab_size
        )
        cum = running + np.cumsum(block_counts, axis=0)
        ns = alpha * (done + 1 + np.arange(rows, dtype=np.int64))
        dists = cum / ns[:, None]
        if prev_dist is not None:
            errors[done - 1] = np.max(np.abs(dists[0] - prev_dist))
        if rows > 1:
            errors[done : done + rows - 1] = np.max(
                np.abs(np.diff(dists, axis=0)), axis=1
            )
        running = cum[-1]
        prev_dist = dists[-1]
        done += rows
        offset += rows * alpha

    assert offset == total
    ns_out = alpha * np.arange(2, n_snapshots + 1, dtype=np.int64)
    return ConvergenceCurve(alpha=alpha, ns=ns_out, errors=errors)
