"""Select the compiled kernels when importable, else the numpy fallback.

Set ``PATHVISC_BACKEND=python`` to force the fallback.
"""

import os

from . import _fallback

fallback = _fallback

if os.environ.get("PATHVISC_BACKEND", "").lower() == "python":
    kernels = _fallback
else:
    try:
        from . import _core as kernels
    except ImportError:  # extension not built
        kernels = _fallback

compiled = None if kernels is _fallback else kernels
BACKEND = kernels.BACKEND
