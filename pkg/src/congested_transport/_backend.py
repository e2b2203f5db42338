"""Kernel backend selection.

Hot kernels (shortest paths) have a numba-compiled implementation and a pure
numpy/Python fallback.  The active backend is chosen once at import time:

* ``CONGESTED_TRANSPORT_BACKEND=numpy``  forces the fallback,
* ``CONGESTED_TRANSPORT_BACKEND=numba``  requires numba (raises if missing),
* unset: numba when importable, fallback otherwise.

``CONGESTED_TRANSPORT_THREADS`` overrides the numba thread count.
"""

from __future__ import annotations

import os

_env = os.environ.get("CONGESTED_TRANSPORT_BACKEND", "").strip().lower()

if _env not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"CONGESTED_TRANSPORT_BACKEND must be 'numba' or 'numpy', got {_env!r}"
    )

if _env == "numpy":
    HAVE_NUMBA = False
else:
    # workqueue is always available; TBB/OMP probing is noisy on some images
    os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:
        if _env == "numba":
            raise
        HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA

if USE_NUMBA:
    _threads = os.environ.get("CONGESTED_TRANSPORT_THREADS", "").strip()
    if _threads:
        import numba

        numba.set_num_threads(max(1, int(_threads)))


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
