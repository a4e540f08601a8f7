"""Backend selection for the sequential step loops.

The compiled extension is used when it was built; otherwise the pure-Python
loops are used. Set ``FREQREG_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("FREQREG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

ema = _impl.ema
hysteresis = _impl.hysteresis
follow = _impl.follow
ou_walk = _impl.ou_walk


def available_backends():
    """Return ``{name: module}`` for every importable backend."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
