"""Backend selection for the hot loops.

The compiled ``_core`` extension is used when importable; otherwise, or when
the environment variable ``DRCPD_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy fallback is used.
"""

import os

from . import _fallback

_force_pure = os.environ.get("DRCPD_PURE_PYTHON", "") not in ("", "0")

if _force_pure:
    _backend = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _backend
        BACKEND = "compiled"
    except ImportError:
        _backend = _fallback
        BACKEND = "python"

build_tree = _backend.build_tree
predict_forest = _backend.predict_forest
train_mlp = _backend.train_mlp


def backends():
    """Map of available backend name -> module (for benchmarks and parity tests)."""
    found = {"python": _fallback}
    try:
        from . import _core
        found["compiled"] = _core
    except ImportError:
        pass
    return found
