"""Monte-Carlo language-model evaluation of black-box sequence generators.

Estimate a generator's per-step next-token distribution by averaging
one-hot samples, score it with cross-entropy metrics (BPC/perplexity)
under teacher forcing, and choose the sample count N either from the
Chernoff-Hoeffding bound or from empirical curve convergence.
"""

from .approximator import (
    ConvergenceCurve,
    StepEstimate,
    approximate_curve,
    approximate_step,
)
from .core import (
    CategoricalDistribution,
    MclmError,
    OneHotSample,
    TokenSequence,
    Vocabulary,
    dist_from_counts,
    smooth,
    sup_norm_distance,
)
from .corpus import (
    TEXT8_SYMBOLS,
    TEXT8_VOCAB,
    CharCorpus,
    generate_demo_text,
    load_char_corpus,
    sample_positions,
)
from .generators import (
    ExternalGenerator,
    GeneratorHandle,
    MarkovModel,
    make_external_generator,
    make_markov_generator,
    make_uniform_generator,
    parse_generator_spec,
    train_markov,
)
from .metrics import (
    EvalConfig,
    EvalReport,
    evaluate,
    evaluate_true,
    log_loss,
)
from .planner import (
    BoundQuery,
    EmpiricalPlan,
    EmpiricalSelection,
    hoeffding_bound_n,
    hoeffding_violation_probability,
    select_n_empirical,
)
from .rng import DEFAULT_SEED, derive_seed, stream_skip

__version__ = "0.1.0"

__all__ = [
    "BoundQuery",
    "CategoricalDistribution",
    "CharCorpus",
    "ConvergenceCurve",
    "DEFAULT_SEED",
    "EmpiricalPlan",
    "EmpiricalSelection",
    "EvalConfig",
    "EvalReport",
    "ExternalGenerator",
    "GeneratorHandle",
    "MarkovModel",
    "MclmError",
    "OneHotSample",
    "StepEstimate",
    "TEXT8_SYMBOLS",
    "TEXT8_VOCAB",
    "TokenSequence",
    "Vocabulary",
    "approximate_curve",
    "approximate_step",
    "derive_seed",
    "dist_from_counts",
    "evaluate",
    "evaluate_true",
    "generate_demo_text",
    "hoeffding_bound_n",
    "hoeffding_violation_probability",
    "load_char_corpus",
    "log_loss",
    "make_external_generator",
    "make_markov_generator",
    "make_uniform_generator",
    "parse_generator_spec",
    "sample_positions",
    "select_n_empirical",
    "smooth",
    "stream_skip",
    "sup_norm_distance",
    "train_markov",
]
