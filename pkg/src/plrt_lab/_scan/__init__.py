"""Scan-kernel backend selection.

The compiled Cython kernel is used when its extension module imported
successfully; otherwise the pure-python kernel takes over. Setting the
environment variable PLRT_PURE_SCAN to a nonempty value other than "0"
forces the python kernel, which is useful for comparing the two.
"""

import os

from .pykernel import (
    STRAT_APPROX_MAX,
    STRAT_APPROX_MIN,
    STRAT_EXACT,
    STRAT_NONE,
)
from . import pykernel

if os.environ.get("PLRT_PURE_SCAN", "0") != "0":
    _impl = pykernel
else:
    try:
        from . import cykernel as _impl
    except ImportError:
        _impl = pykernel

scan_feature = _impl.scan_feature
backend_name = _impl.backend_name

__all__ = [
    "STRAT_NONE",
    "STRAT_EXACT",
    "STRAT_APPROX_MIN",
    "STRAT_APPROX_MAX",
    "scan_feature",
    "backend_name",
    "pykernel",
]
