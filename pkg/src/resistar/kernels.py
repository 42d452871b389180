"""Select the classification kernel backend at import.

The compiled ``_ckernels`` extension is used when it was built; otherwise, or
when ``RESISTAR_PURE_PYTHON`` is set to a non-empty value other than ``0``,
the pure-Python ``_pykernels`` are used.  Both expose the same batch API.
"""

from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_forced = os.environ.get("RESISTAR_PURE_PYTHON", "") not in ("", "0")

if not _forced:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

classify_cube_batch = _impl.classify_cube_batch
classify_simplex_batch = _impl.classify_simplex_batch

# single-point kernels with trace support always come from the Python backend
classify_cube_point = _pykernels.classify_cube_point
classify_simplex_point = _pykernels.classify_simplex_point
vertex_zero_label = _pykernels.vertex_zero_label


def backends() -> dict[str, object]:
    """Every importable backend module, keyed by name."""
    out: dict[str, object] = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
