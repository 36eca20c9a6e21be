"""Split-scan kernels with backend selection at import.

The compiled Cython extension is preferred; the numpy implementation is the
fallback. Set TABRISK_KERNELS=python|cython to force one (forcing cython
raises if the extension is missing).
"""

import os

_requested = os.environ.get("TABRISK_KERNELS", "").strip().lower()
if _requested not in ("", "cython", "python"):
    raise RuntimeError(f"TABRISK_KERNELS must be 'cython' or 'python', got {_requested!r}")

if _requested == "python":
    from tabrisk._kernels._split_np import gini_scan, newton_scan

    BACKEND = "python"
else:
    try:
        from tabrisk._kernels._split_cy import gini_scan, newton_scan

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from tabrisk._kernels._split_np import gini_scan, newton_scan

        BACKEND = "python"


def backend() -> str:
    """Name of the active kernel backend ('cython' or 'python')."""
    return BACKEND


__all__ = ["gini_scan", "newton_scan", "backend", "BACKEND"]
