"""Numeric kernel backend selection.

Imports the compiled extension when it was built, otherwise the numpy
fallback. Set ``CLARITK_PURE_PYTHON=1`` to force the fallback (used by the
parity tests and the benchmark).
"""

import os

from . import _pykernels

if os.environ.get("CLARITK_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = _impl.BACKEND
remove_outliers = _impl.remove_outliers
moving_average = _impl.moving_average
tenlayer_integrate = _impl.tenlayer_integrate
