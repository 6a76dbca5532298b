"""Command-line workflow: plan N analytically, select N empirically,
evaluate a generator, or dump a convergence curve.

Every run starts by echoing its full effective configuration (defaults
included) as one JSON line, so any result can be reproduced from its own
output. Randomized commands default to a fixed documented seed — never
wall-clock time.

Exit codes: 0 success (a not-converged selection is still a success),
1 usage error, 2 runtime error (corpus, generator, or bridge failure).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import kernels
from .core import MclmError
from .generators import (
    DEFAULT_BATCH_LIMIT,
    DEFAULT_TIMEOUT,
    parse_generator_spec,
)
from .metrics import EvalConfig, evaluate, evaluate_true, write_per_position_csv
from .planner import (
    BoundQuery,
    EmpiricalPlan,
    hoeffding_bound_n,
    select_n_empirical,
    write_curve_csv,
)
from .rng import DEFAULT_SEED


class _Parser(argparse.ArgumentParser):
    """argparse, but usage failures exit 1 (2 is reserved for runtime)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _echo_config(args: argparse.Namespace, keys: list[str]) -> None:
    cfg = {"command": args.command}
    cfg.update({k.replace("_", "-"): getattr(args, k) for k in keys})
    print(json.dumps(cfg))


def _positive(parser, name: str, value, minimum=1):
    if value < minimum:
        parser.error(f"--{name} must be >= {minimum}, got {value}")


def _open_unit(parser, name: str, value):
    if not 0.0 < value < 1.0:
        parser.error(f"--{name} must be strictly inside (0, 1), got {value}")


# -- plan-n ------------------------------------------------------------------


def _cmd_plan_n(parser: _Parser, args) -> int:
    _open_unit(parser, "gamma", args.gamma)
    _open_unit(parser, "epsilon", args.epsilon)
    _positive(parser, "vocab-size", args.vocab_size, minimum=2)
    n = hoeffding_bound_n(
        BoundQuery(gamma=args.gamma, epsilon=args.epsilon, vocab_size=args.vocab_size)
    )
    result = {
        "command": "plan-n",
        "gamma": args.gamma,
        "epsilon": args.epsilon,
        "vocab-size": args.vocab_size,
        "n_required": n,
    }
    print(n)
    print(json.dumps(result, indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(result, indent=2) + "\n")
    return 0


# -- shared loading ------------------------------------------------------------


def _load_split(args) -> np.ndarray:
    c = corpus_mod.load_char_corpus(args.corpus)
    if args.split == "all":
        return c.data
    return c.splits.by_name(args.split)


def _make_generator(args):
    try:
        return parse_generator_spec(
            args.generator,
            corpus_mod.TEXT8_VOCAB,
            batch_limit=args.batch_limit,
            timeout=args.timeout,
        )
    except ValueError as e:
        raise _SpecError(str(e)) from e


class _SpecError(Exception):
    """Malformed generator spec string (a usage error, not runtime)."""


# -- evaluate ------------------------------------------------------------------


def _cmd_evaluate(parser: _Parser, args) -> int:
    _positive(parser, "n", args.n)
    _positive(parser, "prefix-window", args.prefix_window)
    _positive(parser, "stride", args.stride)
    _positive(parser, "workers", args.workers)
    _positive(parser, "batch-limit", args.batch_limit)
    if not 0.0 <= args.eta <= 1.0:
        parser.error(f"--eta must be within [0, 1], got {args.eta}")

    _echo_config(
        args,
        [
            "generator", "corpus", "split", "n", "eta", "seed", "prefix_window",
            "stride", "workers", "true_bpc", "out", "per_position",
        ],
    )
    gold = _load_split(args)
    positions = np.arange(1, len(gold), dtype=np.int64)[:: args.stride]
    cfg = EvalConfig(
        n_samples=args.n,
        smoothing_eta=args.eta,
        prefix_window=args.prefix_window,
        seed=args.seed,
        positions=positions,
    )
    per_position = args.per_position is not None

    with _make_generator(args) as gen:
        report = evaluate(gen, gold, cfg, workers=args.workers)
        true_report = None
        if args.true_bpc:
            true_report = evaluate_true(gen, gold, cfg, workers=args.workers)

    print(
        f"bpc={report.bpc:.6f} perplexity={report.perplexity:.4f} "
        f"zero_gold={report.zero_gold_events}/{report.token_count} "
        f"n={report.n_used} eta={report.eta_used} kernel={kernels.ACTIVE_IMPL}"
    )
    if true_report is not None:
        print(
            f"true_bpc={true_report.bpc:.6f} "
            f"true_perplexity={true_report.perplexity:.4f} "
            f"delta={report.bpc - true_report.bpc:+.6f}"
        )
    if args.out:
        Path(args.out).write_text(report.to_json(per_position=per_position) + "\n")
    if true_report is not None and (args.true_out or args.out):
        true_path = args.true_out or _derived_true_path(args.out)
        Path(true_path).write_text(
            true_report.to_json(per_position=per_position) + "\n"
        )
    if per_position:
        with open(args.per_position, "w") as f:
            write_per_position_csv(f, report)
    return 0


def _derived_true_path(out: str) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + ".true" + (p.suffix or ".json")))


# -- select-n / curve ----------------------------------------------------------


def _run_selection(parser: _Parser, args):
    _positive(parser, "alpha", args.alpha)
    _positive(parser, "n-max", args.n_max, minimum=2 * args.alpha)
    _positive(parser, "subset-size", args.subset_size)
    _positive(parser, "prefix-window", args.prefix_window)
    _positive(parser, "workers", args.workers)
    _positive(parser, "batch-limit", args.batch_limit)
    _open_unit(parser, "gamma-prime", args.gamma_prime)

    c = corpus_mod.load_char_corpus(args.corpus)
    try:
        positions = corpus_mod.sample_positions(
            c, args.split, args.subset_size, args.seed
        )
    except corpus_mod.SubsetTooLarge:
        avail = len(c.splits.by_name(args.split)) - 1
        positions = corpus_mod.sample_positions(c, args.split, avail, args.seed)
    positions = [(prefix[-args.prefix_window :], t) for prefix, t in positions]
    plan = EmpiricalPlan(
        alpha=args.alpha,
        gamma_prime=args.gamma_prime,
        n_max=args.n_max,
        subset_size=len(positions),
    )
    with _make_generator(args) as gen:
        selection = select_n_empirical(
            gen, positions, plan, args.seed, workers=args.workers
        )
    return selection


def _selection_json(args, selection) -> dict:
    plan = selection.plan
    return {
        "command": args.command,
        "generator": args.generator,
        "corpus": args.corpus,
        "split": args.split,
        "alpha": plan.alpha,
        "gamma-prime": plan.gamma_prime,
        "n-max": plan.n_max,
        "subset-size": plan.subset_size,
        "seed": args.seed,
        "status": "converged" if selection.converged else "not-converged",
        "chosen_n": plan.chosen_n,
    }


def _curve_metadata(args, selection) -> dict:
    meta = _selection_json(args, selection)
    meta.pop("command")
    return meta


def _cmd_select_n(parser: _Parser, args) -> int:
    selection = _run_selection(parser, args)
    result = _selection_json(args, selection)
    print(json.dumps(result, indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(result, indent=2) + "\n")
    if args.curve_out:
        with open(args.curve_out, "w") as f:
            write_curve_csv(f, selection.curve, _curve_metadata(args, selection))
    return 0


def _cmd_curve(parser: _Parser, args) -> int:
    selection = _run_selection(parser, args)
    if args.curve_out:
        print(json.dumps(_selection_json(args, selection)))
        with open(args.curve_out, "w") as f:
            write_curve_csv(f, selection.curve, _curve_metadata(args, selection))
    else:
        write_curve_csv(sys.stdout, selection.curve, _curve_metadata(args, selection))
    return 0


# -- wiring --------------------------------------------------------------------


def _add_generator_flags(p: _Parser) -> None:
    p.add_argument("--generator", required=True, help="generator spec string")
    p.add_argument("--corpus", required=True, help="path to 27-charset corpus file")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument(
        "--batch-limit", type=int, default=DEFAULT_BATCH_LIMIT,
        help="max tokens per external sample request",
    )
    p.add_argument(
        "--timeout", type=float, default=DEFAULT_TIMEOUT,
        help="seconds to wait on an external peer reply",
    )


def build_parser() -> _Parser:
    parser = _Parser(
        prog="mclm",
        description=(
            "Evaluate black-box sequence generators as language models by "
            "Monte-Carlo approximation of their next-token distributions."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan-n", help="analytic Hoeffding lower bound on N")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--out", help="write the JSON result here too")
    p.set_defaults(func=_cmd_plan_n)

    p = sub.add_parser("evaluate", help="score a generator on a corpus split")
    _add_generator_flags(p)
    p.add_argument(
        "--split", choices=("train", "validation", "test", "all"), default="test"
    )
    p.add_argument("--n", type=int, default=2000, help="samples per position")
    p.add_argument("--eta", type=float, default=1e-3, help="smoothing mixture")
    p.add_argument("--prefix-window", type=int, default=256)
    p.add_argument("--stride", type=int, default=1, help="evaluate every k-th position")
    p.add_argument("--true-bpc", action="store_true",
                   help="also score exact distributions when exposed")
    p.add_argument("--out", help="write the EvalReport JSON here")
    p.add_argument("--true-out", help="where the exact-distribution report goes")
    p.add_argument("--per-position", metavar="CSV",
                   help="write t,loss_bits,raw_gold_prob rows here")
    p.set_defaults(func=_cmd_evaluate)

    for name, help_text, func in (
        ("select-n", "empirically choose N from curve convergence", _cmd_select_n),
        ("curve", "emit the averaged convergence curve as CSV", _cmd_curve),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_generator_flags(p)
        p.add_argument(
            "--split", choices=("train", "validation", "test"), default="validation"
        )
        p.add_argument("--alpha", type=int, default=10, help="snapshot step")
        p.add_argument("--gamma-prime", type=float, default=1e-3,
                       help="convergence threshold")
        p.add_argument("--n-max", type=int, default=100_000)
        p.add_argument("--subset-size", type=int, default=64,
                       help="positions averaged (capped at the split size)")
        p.add_argument("--prefix-window", type=int, default=256)
        p.add_argument("--out", help="write the selection JSON here")
        p.add_argument("--curve-out", help="write the curve CSV here")
        p.set_defaults(func=func)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(parser, args)
    except _SpecError as e:
        print(f"mclm: error: {e}", file=sys.stderr)
        return 1
    except MclmError as e:
        print(f"mclm: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"mclm: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
