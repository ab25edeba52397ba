"""Select the kernel implementation at import time.

The compiled extension is used when it imports cleanly. Setting the
environment variable ``FBESSEL_BACKEND=python`` forces the numpy fallback,
and ``FBESSEL_BACKEND=cython`` makes a missing extension an error.
"""

import os

from . import _kernels_py

_choice = os.environ.get("FBESSEL_BACKEND", "auto").lower()

if _choice == "python":
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        if _choice == "cython":
            raise
        kernels = _kernels_py
        BACKEND = "python"

__all__ = ["kernels", "BACKEND", "_kernels_py"]
