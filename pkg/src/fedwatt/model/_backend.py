"""Selects the recurrence kernel backend at import time.

Prefers the compiled extension; falls back to the numpy implementation when
the extension is missing (e.g. source checkout without a C toolchain).  Set
``FEDWATT_BACKEND=python`` or ``FEDWATT_BACKEND=compiled`` to force a choice;
forcing ``compiled`` raises if the extension is unavailable.
"""

from __future__ import annotations

import os

from . import _kernels_np

_FORCE = os.environ.get("FEDWATT_BACKEND", "").strip().lower()

if _FORCE in {"python", "numpy"}:
    kernels = _kernels_np
    BACKEND = "python"
else:
    try:
        from . import _kernels as _compiled
        kernels = _compiled
        BACKEND = "compiled"
    except ImportError:
        if _FORCE == "compiled":
            raise
        kernels = _kernels_np
        BACKEND = "python"


def backend_name() -> str:
    """Either ``"compiled"`` (Cython extension) or ``"python"`` (numpy)."""
    return BACKEND
