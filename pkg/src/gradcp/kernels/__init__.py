"""Backend dispatch for the hot numeric kernels.

Two interchangeable backends expose the same functions:

- ``prefix_sums(x)``: compensated (Kahan) cumulative sums, shape (n+1,).
- ``sup_scan_brute(sn, pos, eval_idx)``: for every evaluation index j, the
  maximum over i = 1..j of ``|sn[i] - (pos[i]/pos[j]) * sn[j]|`` together with
  the attaining i (O(n^2) reference path).
- ``sup_scan_hull(sn, pos, eval_idx)``: same answer via incremental upper and
  lower convex hulls of the points (pos[i], sn[i]) with slope queries
  (O(n log n) accelerated path).
- ``hmax_batch(g, pos)``: per-draw running suprema of the CUSUM contrast of
  simulated driver paths, shape (n_draws, m).

The numba backend is the default whenever numba imports; set the environment
variable ``GRADCP_NUMBA=0`` to force the pure-numpy fallback. Both backends
produce matching results (the brute scans bitwise, the rest within 1e-10);
see tests/test_kernels.py and benchmarks/bench_kernels.py.
"""

from __future__ import annotations

import os

from . import _numpy as numpy_backend

_env = os.environ.get("GRADCP_NUMBA", "").strip().lower()
if _env in ("0", "false", "off", "no"):
    numba_backend = None
else:
    try:
        from . import _numba as numba_backend  # noqa: F401
    except ImportError:  # pragma: no cover - numba is a declared dependency
        numba_backend = None

_active = numba_backend if numba_backend is not None else numpy_backend


def backend_name() -> str:
    """Name of the active backend ('numba' or 'numpy')."""
    return "numba" if _active is not numpy_backend else "numpy"


def get_backend(name: str | None = None):
    """Return a kernel backend module by name (default: the active one)."""
    if name is None:
        return _active
    if name == "numpy":
        return numpy_backend
    if name == "numba":
        if numba_backend is None:
            raise ValueError("numba backend is unavailable (disabled or not installed)")
        return numba_backend
    raise ValueError(f"unknown backend {name!r}")
