"""Hot-kernel dispatch: compiled extension when built, NumPy fallback otherwise.

Set ``TSBENCH_PURE_PYTHON=1`` to force the fallback (used by the kernel
benchmark and by the cross-implementation tests).
"""

import os

from . import fallback

if os.environ.get("TSBENCH_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = fallback
    IMPLEMENTATION = "python"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        IMPLEMENTATION = "native"
    except ImportError:
        _impl = fallback
        IMPLEMENTATION = "python"

loess_regular = _impl.loess_regular
rolling_quartiles = _impl.rolling_quartiles

__all__ = ["loess_regular", "rolling_quartiles", "IMPLEMENTATION", "fallback"]
