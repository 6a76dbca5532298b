"""Generate a synthetic 27-charset corpus file for desk-scale experiments.

A real 100M-character corpus is a download away, but every example and
test here runs on deterministic synthetic text with order-2 structure:

    python scripts/make_corpus.py --length 1111112 --seed 2024 --out demo.txt
"""

from __future__ import annotations

import argparse
from pathlib import Path

from mclm.corpus import generate_demo_text


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--length", type=int, default=1_111_112,
                        help="characters to generate (default gives a 1e6-char train split)")
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--out", required=True)
    args = parser.parse_args()

    text = generate_demo_text(args.length, args.seed)
    Path(args.out).write_text(text)
    print(f"wrote {len(text)} characters to {args.out}")


if __name__ == "__main__":
    main()
