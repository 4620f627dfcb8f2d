"""Kernel backend selection.

The compiled extension is preferred when importable; set ADSCREEN_PURE_PYTHON=1
to force the numpy fallback (used by the equivalence tests and benchmark).
"""

import os

from . import _kernels_py

if os.environ.get("ADSCREEN_PURE_PYTHON"):
    _impl = _kernels_py
    COMPILED = False
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        COMPILED = True
    except ImportError:
        _impl = _kernels_py
        COMPILED = False

lstm_forward_kernel = _impl.lstm_forward_kernel
lstm_backward_kernel = _impl.lstm_backward_kernel
