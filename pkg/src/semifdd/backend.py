"""Kernel backend selection.

The compiled extension (`semifdd._kernels`, built from Cython) is preferred
when importable; otherwise the numpy fallback is used.  The choice is made
once at import and applies process-wide, so results stay deterministic.

Set FDD_BACKEND=python (or =compiled) to force a backend; forcing the
compiled backend raises if the extension is not built.
"""

import os

from semifdd import _kernels_py

_FORCE = os.environ.get("FDD_BACKEND", "auto").strip().lower()

kernels = None
name = None

if _FORCE in ("auto", "", "compiled", "c", "cython"):
    try:
        from semifdd import _kernels as _compiled

        kernels = _compiled
        name = "compiled"
    except ImportError:
        if _FORCE not in ("auto", ""):
            raise ImportError(
                "FDD_BACKEND requested the compiled backend but "
                "semifdd._kernels is not built; reinstall with a C compiler "
                "or unset FDD_BACKEND"
            )
if kernels is None:
    if _FORCE not in ("auto", "", "python", "numpy", "py"):
        raise ValueError(f"unrecognized FDD_BACKEND value {_FORCE!r}")
    kernels = _kernels_py
    name = "python"

ACT_IDENTITY = _kernels_py.ACT_IDENTITY
ACT_TANH = _kernels_py.ACT_TANH
ACT_LEAKY_RELU = _kernels_py.ACT_LEAKY_RELU
