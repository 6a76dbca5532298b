"""Sampling kernel selection.

Prefers the compiled extension when it imported cleanly, otherwise falls
back to the numpy implementation. Both expose the same two functions with
bit-identical output, so everything downstream is implementation-agnostic.
Set ``MCLM_PURE_PYTHON=1`` to force the fallback (useful for benchmarking
and for debugging suspected kernel discrepancies).
"""

from __future__ import annotations

import os

if os.environ.get("MCLM_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

sample_tokens = _impl.sample_tokens
accumulate_counts = _impl.accumulate_counts

#: "compiled" or "python"; surfaced in CLI diagnostics and the benchmark.
ACTIVE_IMPL: str = _impl.IMPL


def available_impls():
    """Return the importable kernel modules keyed by implementation name."""
    impls = {}
    try:
        from . import _kernels  # type: ignore[attr-defined]

        impls[_kernels.IMPL] = _kernels
    except ImportError:
        pass
    from . import _kernels_py

    impls[_kernels_py.IMPL] = _kernels_py
    return impls
