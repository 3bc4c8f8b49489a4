"""Selection of the numerical kernel backend.

Two interchangeable kernel implementations exist:

* :mod:`expfunc._kernels_nb` -- JIT-compiled (numba) kernels, used by default
  when numba imports successfully.
* :mod:`expfunc._kernels_np` -- pure NumPy kernels, selected by setting the
  environment variable ``EXPFUNC_NO_NUMBA`` to a truthy value (anything other
  than ``""``, ``0``, ``false``, ``no`` or ``off``), or used automatically if
  numba is unavailable.

Both backends implement the same functions with the same semantics; results
agree to floating-point tolerance (they are not bit-identical because the
vectorized and scalar code paths round differently).  Within one backend all
results are deterministic and independent of the worker-thread count.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

ENV_FLAG = "EXPFUNC_NO_NUMBA"

# numba freezes its maximum thread count the first time it is imported.  On
# small containers the CPU count can be 1, which would make a later request
# for several worker threads fail outright, so raise the cap ahead of time
# (oversubscription is harmless for our workloads).
if "NUMBA_NUM_THREADS" not in os.environ:
    os.environ["NUMBA_NUM_THREADS"] = str(max(8, os.cpu_count() or 1))

_forced: str | None = None
_resolved: str | None = None


def _env_requests_numpy() -> bool:
    value = os.environ.get(ENV_FLAG, "").strip().lower()
    return value not in ("", "0", "false", "no", "off")


def backend_name() -> str:
    """Name of the active backend: ``"numba"`` or ``"numpy"``."""
    global _resolved
    if _forced is not None:
        return _forced
    if _resolved is None:
        if _env_requests_numpy():
            _resolved = "numpy"
        else:
            try:
                import numba  # noqa: F401
                _resolved = "numba"
            except Exception:  # pragma: no cover - numba is installed in CI
                _resolved = "numpy"
    return _resolved


def use_numba() -> bool:
    return backend_name() == "numba"


def kernels():
    """Import and return the active kernel module."""
    if use_numba():
        from . import _kernels_nb as mod
    else:
        from . import _kernels_np as mod
    return mod


def set_worker_threads(requested: int) -> int:
    """Set the kernel worker-thread count; returns the effective count.

    The numba backend honours the request up to the process-wide cap fixed at
    numba import time.  The NumPy backend is single-threaded; the request is
    accepted (results never depend on it) and 1 is returned.
    """
    if requested < 1:
        raise ValueError(f"thread count must be >= 1, got {requested}")
    if not use_numba():
        return 1
    import numba

    effective = min(requested, numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(effective)
    return effective


@contextmanager
def override(name: str):
    """Force a backend for the duration of a ``with`` block (testing aid)."""
    global _forced
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    previous = _forced
    _forced = name
    try:
        yield
    finally:
        _forced = previous
