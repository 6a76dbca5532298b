"""Cross-entropy scoring of a generator against a gold sequence.

Average cross-entropy in bits per token:

    ACE = -(1/n) * sum_i log2 q(t_i | t_1 ... t_{i-1})

For character-level text, bits per character (BPC) is ACE itself, and
perplexity is 2^ACE. Evaluation is teacher-forced: every prediction is
conditioned on the gold history, never on the generator's own output.

``evaluate`` scores the Monte-Carlo estimate of the generator's
conditional distribution (the only option for a pure black box);
``evaluate_true`` scores the exact distribution when the generator can
expose it, giving the oracle column an estimate can be compared to.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .approximator import approximate_step
from .core import (
    CategoricalDistribution,
    MclmError,
    TokenSequence,
    as_token_array,
    smooth,
)
from .generators import GeneratorHandle, UnsupportedCapability
from .rng import DEFAULT_SEED, derive_seed


class ZeroProbabilityGold(MclmError):
    """The distribution assigns the gold token probability zero.

    Under `evaluate` this signals the caller disabled smoothing; under
    `evaluate_true` it means the model genuinely rules the gold token
    out, making its cross-entropy infinite.
    """


class NoPositions(MclmError):
    """The evaluation range is empty."""


def log_loss(dist: CategoricalDistribution, gold: int) -> float:
    """-log2 of the probability the distribution gives the gold token."""
    if not 0 <= gold < dist.size:
        raise ValueError(f"gold token {gold} out of range for |V|={dist.size}")
    p = dist[gold]
    if p == 0.0:
        raise ZeroProbabilityGold(
            f"gold token {gold} has zero probability (smoothing disabled?)"
        )
    return -math.log2(p)


@dataclass(frozen=True)
class EvalConfig:
    """Everything an evaluation run depends on, seeds included."""

    n_samples: int = 2000
    smoothing_eta: float = 1e-3
    prefix_window: int = 256
    seed: int = DEFAULT_SEED
    positions: Sequence[int] | None = None  # default: every position >= 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if not 0.0 <= self.smoothing_eta <= 1.0:
            raise ValueError(f"eta must be in [0, 1], got {self.smoothing_eta}")
        if self.prefix_window < 1:
            raise ValueError(f"prefix_window must be >= 1, got {self.prefix_window}")


@dataclass(frozen=True)
class EvalReport:
    """Aggregate scores plus the per-position trace behind them.

    Serializes (``to_json``) to a single JSON object: ace, bpc,
    perplexity, token_count, zero_gold_events, n_used, eta_used, and —
    on request — per_position_log_losses. The trace arrays are kept on
    the object for CSV export but stay out of the JSON.
    """

    ace: float
    bpc: float
    perplexity: float
    token_count: int
    zero_gold_events: int
    n_used: int
    eta_used: float
    per_position_log_losses: list[float]
    eval_positions: np.ndarray = field(compare=False, repr=False, default=None)
    raw_gold_probs: np.ndarray = field(compare=False, repr=False, default=None)

    def to_json(self, *, per_position: bool = False, indent: int = 2) -> str:
        obj = {
            "ace": self.ace,
            "bpc": self.bpc,
            "perplexity": self.perplexity,
            "token_count": self.token_count,
            "zero_gold_events": self.zero_gold_events,
            "n_used": self.n_used,
            "eta_used": self.eta_used,
        }
        if per_position:
            obj["per_position_log_losses"] = self.per_position_log_losses
        return json.dumps(obj, indent=indent)


def write_per_position_csv(out: IO[str], report: EvalReport) -> None:
    """One row per evaluated position: `t,loss_bits,raw_gold_prob`."""
    out.write("t,loss_bits,raw_gold_prob\n")
    for t, loss, p in zip(
        report.eval_positions, report.per_position_log_losses, report.raw_gold_probs
    ):
        out.write(f"{int(t)},{float(loss)!r},{float(p)!r}\n")


def _resolve_positions(gold: np.ndarray, cfg: EvalConfig) -> np.ndarray:
    if cfg.positions is not None:
        pos = np.asarray(list(cfg.positions), dtype=np.int64)
        if pos.size and (pos.min() < 1 or pos.max() >= len(gold)):
            raise ValueError(
                "positions must lie in [1, len(gold)) — each needs >= 1 "
                "token of gold history"
            )
    else:
        pos = np.arange(1, len(gold), dtype=np.int64)
    if pos.size == 0:
        raise NoPositions("nothing to evaluate (need a sequence of length >= 2)")
    return pos


def _eval_span(
    gen: GeneratorHandle,
    gold: np.ndarray,
    positions: np.ndarray,
    cfg: EvalConfig,
    true_dist: bool,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Score a block of positions; returns (losses, raw gold probs, zeros)."""
    losses = np.empty(len(positions))
    raw_probs = np.empty(len(positions))
    zero_events = 0
    for i, t in enumerate(positions):
        t = int(t)
        lo = max(0, t - cfg.prefix_window)
        prefix = gold[lo:t]
        gold_token = int(gold[t])
        if true_dist:
            dist = gen.true_next_dist(prefix)
            raw_p = dist[gold_token]
            if raw_p == 0.0:
                raise ZeroProbabilityGold(
                    f"exact model probability of gold token is 0 at position {t}; "
                    "its true cross-entropy is infinite"
                )
            scored = dist
        else:
            est = approximate_step(
                gen, prefix, cfg.n_samples, derive_seed(cfg.seed, t), position=t
            )
            raw_p = est.counts[gold_token] / cfg.n_samples
            if est.counts[gold_token] == 0:
                zero_events += 1
            scored = smooth(est.dist, cfg.smoothing_eta)
        losses[i] = log_loss(scored, gold_token)
        raw_probs[i] = raw_p
    return losses, raw_probs, zero_events


def _run_eval(
    gen: GeneratorHandle,
    gold: TokenSequence,
    cfg: EvalConfig,
    *,
    workers: int,
    true_dist: bool,
) -> EvalReport:
    gold = as_token_array(gold)
    gen.vocabulary.validate_ids(gold)
    positions = _resolve_positions(gold, cfg)

    if workers > 1 and len(positions) > 1:
        from concurrent.futures import ThreadPoolExecutor

        chunks = np.array_split(positions, min(workers, len(positions)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    lambda chunk: _eval_span(gen, gold, chunk, cfg, true_dist),
                    chunks,
                )
            )
        losses = np.concatenate([p[0] for p in parts])
        raw_probs = np.concatenate([p[1] for p in parts])
        zero_events = sum(p[2] for p in parts)
    else:
        losses, raw_probs, zero_events = _eval_span(
            gen, gold, positions, cfg, true_dist
        )

    ace = float(np.mean(losses))
    return EvalReport(
        ace=ace,
        bpc=ace,
        perplexity=float(2.0**ace),
        token_count=int(len(positions)),
        zero_gold_events=int(zero_events),
        n_used=0 if true_dist else cfg.n_samples,
        eta_used=0.0 if true_dist else cfg.smoothing_eta,
        per_position_log_losses=[float(x) for x in losses],
        eval_positions=positions,
        raw_gold_probs=raw_probs,
    )


def evaluate(
    gen: GeneratorHandle, gold: TokenSequence, cfg: EvalConfig, *, workers: int = 1
) -> EvalReport:
    """Teacher-forced scoring of the Monte-Carlo estimated distributions.

    For each position t, the gold prefix (truncated to the last
    prefix_window tokens) is handed to the generator, the next-token
    distribution is estimated from cfg.n_samples draws under the
    position's derived seed, smoothed by eta, and scored against the
    gold token. zero_gold_events counts positions where the raw
    (pre-smoothing) estimate gave the gold token no mass. Work scales
    linearly in positions x n_samples; positions may be sharded across
    workers with bit-identical results.
    """
    return _run_eval(gen, gold, cfg, workers=workers, true_dist=False)


def evaluate_true(
    gen: GeneratorHandle, gold: TokenSequence, cfg: EvalConfig, *, workers: int = 1
) -> EvalReport:
    """The same loop against the generator's exact conditional
    distributions: no sampling, no smoothing. The report carries
    n_used=0 and eta_used=0 to mark the oracle column."""
    if not gen.supports_true_dist:
        raise UnsupportedCapability(
            "generator does not expose exact distributions; only Monte-Carlo "
            "evaluation is possible"
        )
    return _run_eval(gen, gold, cfg, workers=workers, true_dist=True)
