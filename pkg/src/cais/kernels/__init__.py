"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The backend is chosen once at import time from the ``CAIS_BACKEND``
environment variable:

* ``auto`` (default): numba if importable, numpy otherwise;
* ``numba``: require numba, raise if unavailable;
* ``numpy``: force the pure-numpy fallback.

``BACKEND`` records the active choice. Both backends implement the same
functions and agree to float tolerance (not bitwise: summation order differs).
"""

import os

from . import _numpy as numpy_impl

_choice = os.environ.get("CAIS_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"CAIS_BACKEND={_choice!r} not recognized (use auto, numba, or numpy)"
    )

numba_impl = None
if _choice in ("auto", "numba"):
    try:
        from . import _numba as numba_impl
    except ImportError:
        if _choice == "numba":
            raise
        numba_impl = None

if numba_impl is not None:
    BACKEND = "numba"
    _active = numba_impl
else:
    BACKEND = "numpy"
    _active = numpy_impl

batch_mahalanobis_sq = _active.batch_mahalanobis_sq
weighted_scatter = _active.weighted_scatter
log_sum_exp = _active.log_sum_exp
normalized_from_log = _active.normalized_from_log
sum_sq = _active.sum_sq

__all__ = [
    "BACKEND",
    "batch_mahalanobis_sq",
    "weighted_scatter",
    "log_sum_exp",
    "normalized_from_log",
    "sum_sq",
    "numpy_impl",
    "numba_impl",
]
