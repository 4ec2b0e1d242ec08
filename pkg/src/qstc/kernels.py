"""Backend selection for the simulation hot loops.

The compiled extension is used when it imports; otherwise the numpy
fallback.  ``QSTC_KERNELS=python`` forces the fallback.
"""
import os

if os.environ.get("QSTC_KERNELS", "").lower() == "python":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.NAME

trigger_scan = _impl.trigger_scan
g_values = _impl.g_values
advance_standard = _impl.advance_standard
advance_observer = _impl.advance_observer
advance_deadbeat = _impl.advance_deadbeat
