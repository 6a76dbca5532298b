"""Choosing the sample count N, two ways.

Analytic: the Chernoff-Hoeffding tail bound on each coordinate of the
estimate, union-bounded over the vocabulary, inverted for N. For a
coordinatewise accuracy gamma and bad-event probability epsilon,

    N > ln(2|V|/epsilon) / (2 gamma^2).

This is conservative (the coordinates are coupled through summing to 1,
but the union bound treats them independently), and for tight gamma it
is astronomically large — e.g. gamma=1e-3, epsilon=1e-2, |V|=27 already
needs N > 4.3e6.

Empirical: run one nested sample stream per evaluation position, snapshot
the estimate every alpha samples, and declare convergence at the first N
where the sup-norm movement between consecutive snapshots — averaged over
a subset of positions — drops below gamma_prime. In practice this admits
N orders of magnitude below the analytic bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import IO, Sequence

import numpy as np

from .approximator import ConvergenceCurve, approximate_curve
from .core import MclmError, TokenSequence
from .generators import GeneratorHandle
from .rng import derive_seed


class InvalidBoundQuery(MclmError):
    """gamma or epsilon outside (0, 1), or vocabulary too small."""


@dataclass(frozen=True)
class BoundQuery:
    """Inputs to the analytic bound: accuracy, failure probability, |V|."""

    gamma: float
    epsilon: float
    vocab_size: int

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise InvalidBoundQuery(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidBoundQuery(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.vocab_size < 2:
            raise InvalidBoundQuery(f"vocab_size must be >= 2, got {self.vocab_size}")


def hoeffding_bound_n(q: BoundQuery) -> int:
    """Smallest integer N satisfying the union-bounded Hoeffding inequality.

    Returns the smallest integer strictly greater than
    ln(2|V|/eps) / (2 gamma^2). If the log is nonpositive (2|V|/eps <= 1,
    impossible under BoundQuery's invariants but kept as a guard), any
    N works and 1 is returned.
    """
    ratio = 2.0 * q.vocab_size / q.epsilon
    if ratio <= 1.0:
        return 1
    bound = math.log(ratio) / (2.0 * q.gamma * q.gamma)
    return int(math.floor(bound)) + 1


def hoeffding_violation_probability(gamma: float, n: int) -> float:
    """Per-coordinate tail bound 2*exp(-2*n*gamma^2).

    This bounds Pr(|X_v - p_v| > gamma) for one coordinate; multiply by
    |V| for the union bound over the whole estimate.
    """
    if not 0.0 < gamma < 1.0:
        raise InvalidBoundQuery(f"gamma must be in (0, 1), got {gamma}")
    if n < 1:
        raise InvalidBoundQuery(f"n must be >= 1, got {n}")
    return 2.0 * math.exp(-2.0 * n * gamma * gamma)


@dataclass(frozen=True)
class EmpiricalPlan:
    """Parameters (and, once run, the outcome) of empirical N selection."""

    alpha: int = 10
    gamma_prime: float = 1e-3
    n_max: int = 100_000
    subset_size: int = 64
    chosen_n: int | None = None

    def __post_init__(self):
        if self.alpha < 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if not 0.0 < self.gamma_prime < 1.0:
            raise ValueError(f"gamma_prime must be in (0, 1), got {self.gamma_prime}")
        if self.n_max < 2 * self.alpha:
            raise ValueError(f"n_max must be >= 2*alpha, got {self.n_max}")
        if self.subset_size < 1:
            raise ValueError(f"subset_size must be >= 1, got {self.subset_size}")
        if self.chosen_n is not None and (
            self.chosen_n % self.alpha != 0 or self.chosen_n > self.n_max
        ):
            raise ValueError("chosen_n must be a multiple of alpha and <= n_max")


@dataclass(frozen=True)
class EmpiricalSelection:
    """Outcome of select_n_empirical: filled plan plus the averaged curve."""

    plan: EmpiricalPlan
    curve: ConvergenceCurve

    @property
    def converged(self) -> bool:
        return self.plan.chosen_n is not None


def select_n_empirical(
    gen: GeneratorHandle,
    positions: Sequence[tuple[TokenSequence, int]],
    plan: EmpiricalPlan,
    seed: int,
    *,
    workers: int = 1,
) -> EmpiricalSelection:
    """Average per-position convergence curves and pick the first N under
    gamma_prime.

    Each (prefix, position) pair contributes one curve computed under its
    own derived stream; curves are averaged pointwise (arithmetic mean)
    and chosen_n is the smallest snapshot N whose averaged error is below
    the threshold. A threshold never met within n_max is not an error:
    the selection comes back with chosen_n = None and the full curve, for
    diagnosing non-convergent generators.
    """
    if not positions:
        raise ValueError("positions must be nonempty")

    def one_curve(item: tuple[TokenSequence, int]) -> ConvergenceCurve:
        prefix, position = item
        return approximate_curve(
            gen,
            prefix,
            plan.n_max,
            plan.alpha,
            derive_seed(seed, position),
            position=position,
        )

    if workers > 1 and len(positions) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            curves = list(pool.map(one_curve, positions))
    else:
        curves = [one_curve(item) for item in positions]

    errors = np.mean([c.errors for c in curves], axis=0)
    avg = ConvergenceCurve(alpha=plan.alpha, ns=curves[0].ns, errors=errors)

    below = np.flatnonzero(avg.errors < plan.gamma_prime)
    chosen = int(avg.ns[below[0]]) if below.size else None
    return EmpiricalSelection(plan=replace(plan, chosen_n=chosen), curve=avg)


def write_curve_csv(
    out: IO[str],
    curve: ConvergenceCurve,
    metadata: dict[str, object] | None = None,
) -> None:
    """Serialize a curve as CSV: `# key=value` comment lines, then
    `n,error` rows — ready for plotting error against N."""
    for key, value in (metadata or {}).items():
        out.write(f"# {key}={value}\n")
    out.write("n,error\n")
    for n, e in zip(curve.ns, curve.errors):
        out.write(f"{int(n)},{float(e)!r}\n")
