"""Compare the compiled sampling kernel against the numpy fallback.

Both implementations are bit-identical by contract; this measures how
much the extension buys at evaluation-scale workloads. Run directly:

    python benchmarks/bench_kernels.py [--repeats 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mclm.kernels import available_impls


def bench(fn, cdf, count, seed, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(cdf, count, seed)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    impls = available_impls()
    if "compiled" not in impls:
        print("compiled kernel not built; only the numpy fallback is available")

    cases = [
        ("27-symbol, N=2e3 (one eval step)", 27, 2_000),
        ("27-symbol, N=1e5 (curve stream)", 27, 100_000),
        ("27-symbol, N=1e7 (bound scale)", 27, 10_000_000),
        ("50k-symbol, N=1e5", 50_000, 100_000),
    ]
    print(f"{'case':38} " + " ".join(f"{name:>12}" for name in impls) + "   speedup")
    for label, vocab, count in cases:
        cdf = np.cumsum(np.full(vocab, 1.0 / vocab))
        times = {
            name: bench(mod.sample_tokens, cdf, count, 42, args.repeats)
            for name, mod in impls.items()
        }
        outputs = [mod.sample_tokens(cdf, 1000, 7) for mod in impls.values()]
        for other in outputs[1:]:
            assert np.array_equal(outputs[0], other), "impl outputs diverge!"
        cols = " ".join(f"{times[name] * 1e3:10.2f}ms" for name in impls)
        if "compiled" in times and "python" in times:
            ratio = f"{times['python'] / times['compiled']:8.2f}x"
        else:
            ratio = "       -"
        print(f"{label:38} {cols} {ratio}")


if __name__ == "__main__":
    main()
