"""Kernel selector.

The compiled extension is used when it imports; otherwise the NumPy
reference implementation is used.  Setting ``ZKLAB_PURE_PYTHON=1`` forces the
fallback, which the benchmark and the cross-check tests rely on.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("ZKLAB_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _kernels_py

slice_lengths = _impl.slice_lengths
mp_pair_sum = _impl.mp_pair_sum
grouped_kernel_sum = _impl.grouped_kernel_sum


def backends() -> dict:
    """Both implementations keyed by name, for cross-checks and benchmarks."""
    out = {"python": _kernels_py}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:  # pragma: no cover
        pass
    return out
