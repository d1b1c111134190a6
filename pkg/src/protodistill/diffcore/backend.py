"""Kernel backend selection.

The compiled extension is preferred when importable; the NumPy fallback
is used otherwise.  ``PROTODISTILL_KERNELS=numpy`` (or ``cython``) forces
a backend explicitly, which the benchmark suite uses to compare both.
"""

import os

_forced = os.environ.get("PROTODISTILL_KERNELS", "").strip().lower()

if _forced == "numpy":
    from . import _pykernels as kernels
elif _forced == "cython":
    from . import _ckernels as kernels  # type: ignore[no-redef]
else:
    try:
        from . import _ckernels as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _pykernels as kernels  # type: ignore[no-redef]

BACKEND = kernels.NAME


def load_backend(name):
    """Return a specific kernel module by name ('numpy' or 'cython')."""
    if name == "numpy":
        from . import _pykernels
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend: {name!r}")
