"""Kernel backend selection.

The hot loops (digamma/trigamma over rows x grid x bootstrap replicates)
exist twice: a compiled Cython extension and a pure-numpy fallback with
identical semantics. Selection happens once, at import time:

* ``AUSTEN_KERNELS=auto`` (default): compiled if the extension built,
  numpy otherwise.
* ``AUSTEN_KERNELS=compiled``: require the extension, fail loudly.
* ``AUSTEN_KERNELS=python``: force the numpy fallback.
"""

from __future__ import annotations

import os

from . import _kernels_np


def _load_compiled():
    try:
        from . import _fastkern  # noqa: PLC0415
    except ImportError:
        return None
    return _fastkern


_compiled = _load_compiled()
_choice = os.environ.get("AUSTEN_KERNELS", "auto").strip().lower() or "auto"

if _choice not in ("auto", "compiled", "python"):
    raise ImportError(
        f"AUSTEN_KERNELS={_choice!r} not understood; "
        "use 'auto', 'compiled', or 'python'"
    )
if _choice == "compiled" and _compiled is None:
    raise ImportError(
        "AUSTEN_KERNELS=compiled, but the compiled extension is not "
        "available; rebuild the package or unset the variable"
    )

if _choice == "python" or _compiled is None:
    kernels = _kernels_np
    KERNEL_BACKEND = "python"
else:
    kernels = _compiled
    KERNEL_BACKEND = "compiled"


def available_backends() -> dict:
    """Importable backends, keyed by name. Used by tests and benchmarks."""
    out = {"python": _kernels_np}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out
