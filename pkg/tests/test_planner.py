"""Sample-size planning: the analytic Hoeffding route and the empirical
convergence-curve route."""

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mclm.approximator import approximate_curve
from mclm.corpus import TEXT8_VOCAB
from mclm.generators import make_uniform_generator
from mclm.kernels import sample_tokens
from mclm.planner import (
    BoundQuery,
    EmpiricalPlan,
    InvalidBoundQuery,
    hoeffding_bound_n,
    hoeffding_violation_probability,
    select_n_empirical,
    write_curve_csv,
)
from mclm.rng import derive_seed

from helpers import DeterministicGenerator

EMPTY = np.array([], dtype=np.int32)


class BernoulliGenerator:
    """Two-symbol oracle with P(token 1) = p."""

    def __init__(self, p: float):
        self.p = p
        self._cdf = np.cumsum([1.0 - p, p])

    def sample_next(self, prefix, count, seed):
        return sample_tokens(self._cdf, count, seed)


# -- analytic bound -------------------------------------------------------------


def test_bound_char_vocab():
    assert hoeffding_bound_n(BoundQuery(1e-3, 1e-2, 27)) == 4297078


def test_bound_word_vocab():
    assert hoeffding_bound_n(BoundQuery(1e-3, 1e-2, 50000)) == 8059048


@pytest.mark.parametrize("vocab_size", [2, 27, 1000, 50000])
def test_bound_is_smallest_sufficient_integer(vocab_size):
    q = BoundQuery(1e-3, 1e-2, vocab_size)
    n = hoeffding_bound_n(q)
    raw = math.log(2.0 * vocab_size / q.epsilon) / (2.0 * q.gamma**2)
    assert n > raw
    assert n - 1 <= raw


def test_bound_union_closes():
    # at the returned N, |V| copies of the per-coordinate tail fit under epsilon
    for vocab_size in (27, 50000):
        q = BoundQuery(1e-3, 1e-2, vocab_size)
        n = hoeffding_bound_n(q)
        assert vocab_size * hoeffding_violation_probability(q.gamma, n) <= q.epsilon


@given(
    gamma=st.floats(1e-4, 0.5),
    epsilon=st.floats(1e-6, 0.5),
    vocab_size=st.integers(2, 10**6),
)
@settings(max_examples=200)
def test_bound_monotonicity(gamma, epsilon, vocab_size):
    n = hoeffding_bound_n(BoundQuery(gamma, epsilon, vocab_size))
    assert n >= 1
    # tighter accuracy, tighter failure budget, bigger vocabulary: all cost samples
    assert hoeffding_bound_n(BoundQuery(gamma / 2, epsilon, vocab_size)) >= n
    assert hoeffding_bound_n(BoundQuery(gamma, epsilon / 2, vocab_size)) >= n
    assert hoeffding_bound_n(BoundQuery(gamma, epsilon, 2 * vocab_size)) >= n


def test_bound_query_validation():
    with pytest.raises(InvalidBoundQuery):
        BoundQuery(0.0, 1e-2, 27)
    with pytest.raises(InvalidBoundQuery):
        BoundQuery(1.5, 1e-2, 27)
    with pytest.raises(InvalidBoundQuery):
        BoundQuery(1e-3, 0.0, 27)
    with pytest.raises(InvalidBoundQuery):
        BoundQuery(1e-3, 1e-2, 1)


def test_violation_probability_examples():
    assert hoeffding_violation_probability(0.5, 1) == pytest.approx(2 * math.exp(-0.5))
    # doubling n squares the exponential: v(2n) = v(n)^2 / 2
    v1 = hoeffding_violation_probability(0.1, 500)
    v2 = hoeffding_violation_probability(0.1, 1000)
    assert v2 == pytest.approx(v1 * v1 / 2.0)


def test_violation_probability_validation():
    with pytest.raises(InvalidBoundQuery):
        hoeffding_violation_probability(0.0, 10)
    with pytest.raises(InvalidBoundQuery):
        hoeffding_violation_probability(0.1, 0)


def test_violation_frequency_respects_bound():
    # Bernoulli(0.3), 100 draws per repetition, gamma chosen so the bound
    # is exactly 0.1; over 200 repetitions the observed violation rate
    # must stay within sampling slack of the bound
    gen = BernoulliGenerator(0.3)
    n, reps = 100, 200
    gamma = math.sqrt(math.log(20.0) / 200.0)
    bound = hoeffding_violation_probability(gamma, n)
    assert bound == pytest.approx(0.1)
    violations = 0
    for k in range(reps):
        tokens = gen.sample_next(EMPTY, n, derive_seed(4242, k))
        p_hat = np.count_nonzero(tokens == 1) / n
        violations += abs(p_hat - 0.3) > gamma
    assert violations == 1  # frozen realization
    assert violations / reps <= bound + 3 * math.sqrt(bound * (1 - bound) / reps)


# -- empirical selection ------------------------------------------------------------


def test_plan_defaults():
    plan = EmpiricalPlan()
    assert (plan.alpha, plan.gamma_prime, plan.n_max, plan.subset_size) == (
        10,
        1e-3,
        100_000,
        64,
    )
    assert plan.chosen_n is None


def test_plan_validation():
    with pytest.raises(ValueError):
        EmpiricalPlan(alpha=0)
    with pytest.raises(ValueError):
        EmpiricalPlan(gamma_prime=0.0)
    with pytest.raises(ValueError):
        EmpiricalPlan(alpha=10, n_max=15)
    with pytest.raises(ValueError):
        EmpiricalPlan(subset_size=0)
    with pytest.raises(ValueError):
        EmpiricalPlan(alpha=10, chosen_n=15)  # not a multiple of alpha
    with pytest.raises(ValueError):
        EmpiricalPlan(n_max=100, chosen_n=110)  # beyond n_max


def test_select_n_degenerate_converges_immediately():
    gen = DeterministicGenerator(TEXT8_VOCAB, 4)
    sel = select_n_empirical(gen, [(EMPTY, 0)], EmpiricalPlan(alpha=10), 1)
    assert sel.converged
    assert sel.plan.chosen_n == 20  # first snapshot pair, zero movement


def test_select_n_uniform_frozen():
    gen = make_uniform_generator(TEXT8_VOCAB)
    positions = [(EMPTY, t) for t in range(6)]
    plan = EmpiricalPlan(alpha=10, gamma_prime=1e-3, n_max=100_000, subset_size=6)
    sel = select_n_empirical(gen, positions, plan, 11)
    assert sel.converged
    assert sel.plan.chosen_n == 1360
    # orders of magnitude below the analytic bound for the same vocabulary
    assert sel.plan.chosen_n < hoeffding_bound_n(BoundQuery(1e-3, 1e-2, 27)) / 1000


def test_select_n_threshold_semantics():
    # chosen_n is the first snapshot strictly below gamma_prime
    gen = make_uniform_generator(TEXT8_VOCAB)
    positions = [(EMPTY, t) for t in range(6)]
    plan = EmpiricalPlan(alpha=10, gamma_prime=1e-3, n_max=100_000, subset_size=6)
    sel = select_n_empirical(gen, positions, plan, 11)
    idx = list(sel.curve.ns).index(sel.plan.chosen_n)
    assert sel.curve.errors[idx] < plan.gamma_prime
    assert np.all(sel.curve.errors[:idx] >= plan.gamma_prime)


def test_select_n_not_converged_keeps_curve():
    gen = make_uniform_generator(TEXT8_VOCAB)
    plan = EmpiricalPlan(alpha=10, gamma_prime=1e-12, n_max=200)
    sel = select_n_empirical(gen, [(EMPTY, 0)], plan, 7)
    assert not sel.converged
    assert sel.plan.chosen_n is None
    assert len(sel.curve.errors) == 200 // 10 - 1  # full diagnostic curve


def test_select_n_curve_is_position_average():
    gen = make_uniform_generator(TEXT8_VOCAB)
    positions = [(EMPTY, 3), (EMPTY, 9)]
    plan = EmpiricalPlan(alpha=10, n_max=500)
    sel = select_n_empirical(gen, positions, plan, 13)
    a = approximate_curve(gen, EMPTY, 500, 10, derive_seed(13, 3), position=3)
    b = approximate_curve(gen, EMPTY, 500, 10, derive_seed(13, 9), position=9)
    assert np.array_equal(sel.curve.errors, (a.errors + b.errors) / 2.0)
    assert np.array_equal(sel.curve.ns, a.ns)


def test_select_n_workers_identical():
    gen = make_uniform_generator(TEXT8_VOCAB)
    positions = [(EMPTY, t) for t in range(5)]
    plan = EmpiricalPlan(alpha=10, n_max=1000)
    one = select_n_empirical(gen, positions, plan, 3, workers=1)
    par = select_n_empirical(gen, positions, plan, 3, workers=4)
    assert one.plan == par.plan
    assert np.array_equal(one.curve.errors, par.curve.errors)


def test_select_n_rejects_empty_positions():
    gen = make_uniform_generator(TEXT8_VOCAB)
    with pytest.raises(ValueError):
        select_n_empirical(gen, [], EmpiricalPlan(), 1)


def test_select_n_curve_bounds():
    gen = make_uniform_generator(TEXT8_VOCAB)
    sel = select_n_empirical(gen, [(EMPTY, 0)], EmpiricalPlan(alpha=10, n_max=400), 5)
    assert np.all(sel.curve.errors >= 0.0)
    assert np.all(sel.curve.errors <= 1.0)
    assert np.all(np.diff(sel.curve.ns) == 10)


# -- CSV output ----------------------------------------------------------------


def test_curve_csv_format():
    gen = DeterministicGenerator(TEXT8_VOCAB, 0)
    sel = select_n_empirical(gen, [(EMPTY, 0)], EmpiricalPlan(alpha=10, n_max=40), 1)
    buf = io.StringIO()
    write_curve_csv(buf, sel.curve, {"generator": "test", "seed": 1})
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# generator=test"
    assert lines[1] == "# seed=1"
    assert lines[2] == "n,error"
    assert lines[3:] == ["20,0.0", "30,0.0", "40,0.0"]


def test_curve_csv_round_trips_floats():
    gen = make_uniform_generator(TEXT8_VOCAB)
    sel = select_n_empirical(gen, [(EMPTY, 0)], EmpiricalPlan(alpha=10, n_max=300), 9)
    buf = io.StringIO()
    write_curve_csv(buf, sel.curve)
    rows = [line.split(",") for line in buf.getvalue().splitlines()[1:]]
    ns = [int(r[0]) for r in rows]
    errors = [float(r[1]) for r in rows]
    assert ns == [int(n) for n in sel.curve.ns]
    assert errors == [float(e) for e in sel.curve.errors]  # repr round-trip is exact
