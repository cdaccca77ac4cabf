"""Hot kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``TGEXTRAP_DISABLE_NUMBA`` is unset or ``0``. Both backends stay
importable so tests and the benchmark can compare them directly.
"""

import os

from . import _numpy as numpy_backend

try:
    from . import _numba as numba_backend
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_backend = None

DISABLED = os.environ.get("TGEXTRAP_DISABLE_NUMBA", "0") not in ("", "0")
USING_NUMBA = numba_backend is not None and not DISABLED

_active = numba_backend if USING_NUMBA else numpy_backend

mgs_qr = _active.mgs_qr
arnoldi_orth = _active.arnoldi_orth
cp_sym_eval = _active.cp_sym_eval
completion_loss_grad = _active.completion_loss_grad

__all__ = [
    "USING_NUMBA",
    "arnoldi_orth",
    "completion_loss_grad",
    "cp_sym_eval",
    "mgs_qr",
    "numba_backend",
    "numpy_backend",
]
