"""Backend selection for the hot kernels.

Prefers the compiled extension when it is importable, otherwise falls back
to the pure-Python implementation. Set ``LOADID_PURE_KERNELS=1`` to force
the fallback (used by the parity tests and the benchmark).
"""

from __future__ import annotations

import os

from . import _purekernels

if os.environ.get("LOADID_PURE_KERNELS"):
    _impl = _purekernels
    BACKEND = "python"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        _impl = _purekernels
        BACKEND = "python"

simulate_pq = _impl.simulate_pq
frechet_dp = _impl.frechet_dp
