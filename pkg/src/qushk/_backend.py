"""Kernel backend selection.

The hot loops (log-moment reductions, table solver) exist twice: once as the
plain functions defined in ``_kernels`` and once compiled with numba. Which
pair is active is decided at import time from the ``QUSHK_BACKEND``
environment variable:

``auto``
    use numba when it imports cleanly, plain numpy otherwise (default)
``numba``
    require numba; raise if it is missing
``numpy``
    force the interpreted path even when numba is installed

Both paths execute the same source, so results are identical bit for bit.
"""

from __future__ import annotations

import os

_VALID = ("auto", "numba", "numpy")

_requested = os.environ.get("QUSHK_BACKEND", "auto").strip().lower()
if _requested not in _VALID:
    raise RuntimeError(
        f"QUSHK_BACKEND must be one of {_VALID}, got {_requested!r}"
    )

if _requested == "numpy":
    USE_NUMBA = False
elif _requested == "numba":
    import numba  # noqa: F401  fail loudly if explicitly requested

    USE_NUMBA = True
else:
    try:
        import numba  # noqa: F401

        USE_NUMBA = True
    except ImportError:
        USE_NUMBA = False


def active_backend() -> str:
    """Name of the kernel implementation actually in use."""
    return "numba" if USE_NUMBA else "numpy"
