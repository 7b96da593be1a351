"""Kernel backend selection.

The compiled extension (``latscat._core``) is preferred; the numpy
implementation (``latscat._purepy``) is the drop-in fallback.  Set
``LATSCAT_KERNELS=purepy`` or ``LATSCAT_KERNELS=cython`` to force one.
"""

from __future__ import annotations

import os

_requested = os.environ.get("LATSCAT_KERNELS", "auto").lower()

if _requested == "purepy":
    from . import _purepy as _impl
elif _requested in ("auto", "cython"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "cython":
            raise
        from . import _purepy as _impl  # type: ignore[no-redef]
else:
    raise ValueError(f"unknown LATSCAT_KERNELS value: {_requested!r}")

BACKEND = _impl.NAME

lu_det = _impl.lu_det
lu_logdet = _impl.lu_logdet
lu_solve = _impl.lu_solve
jost_backward = _impl.jost_backward
jost_x0_grid = _impl.jost_x0_grid
mfun_e1 = _impl.mfun_e1


def available_backends() -> dict:
    """Import every buildable backend (used by tests and the benchmark)."""
    from . import _purepy

    found = {"purepy": _purepy}
    try:
        from . import _core

        found["cython"] = _core
    except ImportError:
        pass
    return found
