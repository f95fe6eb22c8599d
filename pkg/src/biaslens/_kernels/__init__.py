"""Kernel backend selection.

Importing this package picks the compiled Cython kernels when they are
available and silently falls back to the numpy implementations when they
are not (source checkout without a compiler, unsupported platform).
Set ``BIASLENS_PURE_PYTHON=1`` to force the fallback; ``backend_name()``
reports which one is live. Both backends expose the same functions and
agree to float tolerance; ``tests/test_kernels.py`` and
``benchmarks/bench_kernels.py`` hold them to that.
"""

from __future__ import annotations

import os

from . import _numpy_impl

if os.environ.get("BIASLENS_PURE_PYTHON"):
    _impl = _numpy_impl
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _numpy_impl

maxsim_scores = _impl.maxsim_scores
greedy_dedup = _impl.greedy_dedup
silhouette_sums = _impl.silhouette_sums


def backend_name() -> str:
    return _impl.BACKEND
