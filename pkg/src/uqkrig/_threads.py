"""Process-wide BLAS thread policy.

The linear algebra here runs on matrices of a few hundred rows at most,
where BLAS thread-pool handoff costs more than the arithmetic itself
(dramatically so on kernels with slow futex wakes).  Fits therefore pin
BLAS pools to one thread the first time they run; parallelism belongs at
the repetition level, not inside a factorization.  Timing comparisons
also rely on this fixed single-thread reference mode.

Set ``UQKRIG_KEEP_BLAS_THREADS=1`` to leave the pools untouched.
"""

from __future__ import annotations

import os

_limiter = None


def ensure_reference_blas_threads() -> None:
    """Pin BLAS thread pools to a single thread (idempotent, opt-out)."""
    global _limiter
    if _limiter is not None or os.environ.get("UQKRIG_KEEP_BLAS_THREADS"):
        return
    try:
        from threadpoolctl import threadpool_limits
        _limiter = threadpool_limits(limits=1, user_api="blas")
    except Exception:
        _limiter = False  # unavailable; proceed with default pools
