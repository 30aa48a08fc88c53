"""Pair-sum backend selection.

Prefers the compiled Cython kernels when the extension was built; otherwise
falls back to the NumPy implementation.  Set FRAC_PLAP_BACKEND=python or
FRAC_PLAP_BACKEND=compiled to force a choice (the latter raises if the
extension is unavailable).
"""

import os

from . import py_backend

_choice = os.environ.get("FRAC_PLAP_BACKEND", "").strip().lower()

if _choice == "python":
    _impl = py_backend
    BACKEND = "python"
else:
    try:
        from . import _c_backend as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise ImportError(
                "FRAC_PLAP_BACKEND=compiled but the fracplap._pairsum._c_backend "
                "extension is not built; reinstall with a C compiler available"
            )
        _impl = py_backend
        BACKEND = "python"

seminorm_pp = _impl.seminorm_pp
seminorm_grad = _impl.seminorm_grad
pairing_pp = _impl.pairing_pp
halfpair_pos_grad = _impl.halfpair_pos_grad

__all__ = [
    "BACKEND",
    "seminorm_pp",
    "seminorm_grad",
    "pairing_pp",
    "halfpair_pos_grad",
    "py_backend",
]
