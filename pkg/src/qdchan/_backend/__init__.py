"""Kernel backend selection.

The compiled extension is preferred when built; the pure-Python module is
the fallback. `QDCHAN_BACKEND=python` forces the fallback,
`QDCHAN_BACKEND=compiled` makes a missing extension an import error.
Both backends are bit-compatible, so the choice only affects speed.
"""

import os

from . import pykernels

_requested = os.environ.get("QDCHAN_BACKEND", "auto").strip().lower()

if _requested in ("auto", "", "compiled", "c"):
    try:
        from . import _ckernels as kernels
        BACKEND = "compiled"
    except ImportError:
        if _requested in ("compiled", "c"):
            raise ImportError(
                "QDCHAN_BACKEND=compiled but the _ckernels extension is not "
                "built; run `pip install -e . --no-build-isolation`"
            )
        kernels = pykernels
        BACKEND = "python"
elif _requested in ("python", "pure"):
    kernels = pykernels
    BACKEND = "python"
else:
    raise ValueError(f"unrecognized QDCHAN_BACKEND value: {_requested!r}")


def backend_name():
    """Name of the kernel backend in use: 'compiled' or 'python'."""
    return BACKEND


def get_kernels(name=None):
    """Fetch a kernels module by name ('python', 'compiled', or None=active)."""
    if name is None:
        return kernels
    if name == "python":
        return pykernels
    if name == "compiled":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend name: {name!r}")
