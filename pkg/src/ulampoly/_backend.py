"""Pick the compiled kernels when available.

Set ``ULAMPOLY_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

if os.environ.get("ULAMPOLY_PURE_PYTHON") == "1":
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        from . import _kernels_py as kernels

BACKEND = kernels.BACKEND

__all__ = ["kernels", "BACKEND"]
