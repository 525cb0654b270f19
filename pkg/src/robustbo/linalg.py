"""Numerically guarded Cholesky factorization."""

from __future__ import annotations

import numpy as np


class NumericalError(RuntimeError):
    """Raised when a covariance matrix cannot be factorized even with jitter."""


def jittered_cholesky(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``K``, adding diagonal jitter on failure.

    The first attempt uses no jitter.  On failure, jitter starts at
    ``1e-10 * trace(K) / n`` and escalates by factors of 10 up to
    ``1e-4 * trace(K) / n`` before giving up.

    Returns
    -------
    (L, jitter_used) : lower-triangular factor and the jitter actually added.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    try:
        return np.linalg.cholesky(K), 0.0
    except np.linalg.LinAlgError:
        pass
    base = np.trace(K) / n
    if not np.isfinite(base) or base <= 0.0:
        base = 1.0
    jitter = 1e-10 * base
    cap = 1e-4 * base
    eye = np.eye(n)
    while jitter <= cap * (1.0 + 1e-12):
        try:
            return np.linalg.cholesky(K + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NumericalError(
        f"Cholesky failed after jitter escalation up to {cap:.3e}"
    )
