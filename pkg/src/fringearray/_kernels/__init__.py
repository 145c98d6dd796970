"""Hot-loop kernels with backend selection at import time.

The compiled Cython extension is preferred; the NumPy fallback is used if
the extension is missing or if ``FRINGEARRAY_NO_EXT=1`` is set.  Both
backends are bit-identical (see test_kernels.py).
"""

import os

from . import _fallback

_BACKEND = "python"
_impl = _fallback

if os.environ.get("FRINGEARRAY_NO_EXT", "").lower() not in ("1", "true", "yes"):
    try:
        from . import _core as _impl_ext
    except ImportError:
        pass
    else:
        _impl = _impl_ext
        _BACKEND = "compiled"

inverse_cdf = _impl.inverse_cdf
ou_paths = _impl.ou_paths


def backend() -> str:
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return _BACKEND
