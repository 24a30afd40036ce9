"""Compiled inner loops for the reduced-state decoders.

The one- and two-state decoders are strictly sequential in k, so the Monte
Carlo harness runs them through these numba kernels. Batch kernels take a
(n_sequences, K) block of observations; path kernels additionally expose the
per-step decoder state for debugging and invariant tests.

Numerical safety: per step the three candidate likelihood exponents are
shifted by their maximum before exponentiation. Decisions and stored weights
only involve ratios, so the shift never changes a result, but it keeps the
recursion free of overflow/underflow for any trace.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

__all__ = [
    "one_state_batch",
    "one_state_path",
    "two_state_step",
    "two_states_batch",
    "two_states_path",
]


@njit(cache=True, inline="always")
def _one_state_step(xhat: int, yk: float):
    # decide 0 on the tie y == xhat + 1/2
    if yk > xhat + 0.5:
        return 1, xhat + 1
    return 0, xhat


@njit(cache=True)
def one_state_batch(y):
    """Decode a (n, K) block with the single-surviving-state rule."""
    n, K = y.shape
    uhat = np.zeros((n, K), dtype=np.int8)
    for t in range(n):
        xhat = 0
        for k in range(K):
            bit, xhat = _one_state_step(xhat, y[t, k])
            uhat[t, k] = bit
    return uhat


@njit(cache=True)
def one_state_path(y):
    """Single-trace decode returning (decisions, estimated-state path)."""
    K = y.shape[0]
    uhat = np.zeros(K, dtype=np.int8)
    xhat_path = np.zeros(K, dtype=np.int64)
    xhat = 0
    for k in range(K):
        bit, xhat = _one_state_step(xhat, y[k])
        uhat[k] = bit
        xhat_path[k] = xhat
    return uhat, xhat_path


@njit(cache=True, inline="always")
def two_state_step(alpha: float, xhat: int, yk: float, inv2s2: float, weighted: bool):
    """One update of the two-surviving-states decoder.

    State is (alpha, xhat): the lower surviving trellis state and its
    normalized probability; the companion state xhat+1 carries 1-alpha.
    Returns (bit decision, new alpha, new xhat). Ties in the bit decision
    resolve to 0; a tie between the two outer candidate masses discards the
    higher-indexed candidate.
    """
    e0 = -(yk - xhat) * (yk - xhat) * inv2s2
    e1 = -(yk - xhat - 1.0) * (yk - xhat - 1.0) * inv2s2
    e2 = -(yk - xhat - 2.0) * (yk - xhat - 2.0) * inv2s2
    m = max(e0, max(e1, e2))
    g0 = math.exp(e0 - m)
    g1 = math.exp(e1 - m)
    g2 = math.exp(e2 - m)

    stay = alpha * g0 + (1.0 - alpha) * g1
    step = alpha * g1 + (1.0 - alpha) * g2
    bit = 1 if step > stay else 0

    z1 = alpha * g0
    z2 = alpha * g1 + (1.0 - alpha) * g1 if weighted else g1
    z3 = (1.0 - alpha) * g2
    if z1 < z3:
        # lower outer candidate dies: survivors (xhat+1, xhat+2)
        denom = z2 + z3
        alpha_new = z2 / denom if denom > 0.0 else (1.0 if e1 >= e2 else 0.0)
        xhat_new = xhat + 1
    else:
        denom = z1 + z2
        alpha_new = z1 / denom if denom > 0.0 else (1.0 if e0 >= e1 else 0.0)
        xhat_new = xhat
    if alpha_new < 0.0:
        alpha_new = 0.0
    elif alpha_new > 1.0:
        alpha_new = 1.0
    return bit, alpha_new, xhat_new


@njit(cache=True)
def two_states_batch(y, sigma, weighted):
    """Decode a (n, K) block with the two-surviving-states rule."""
    n, K = y.shape
    uhat = np.zeros((n, K), dtype=np.int8)
    inv2s2 = 1.0 / (2.0 * sigma * sigma)
    for t in range(n):
        alpha = 1.0
        xhat = 0
        for k in range(K):
            bit, alpha, xhat = two_state_step(alpha, xhat, y[t, k], inv2s2, weighted)
            uhat[t, k] = bit
    return uhat


@njit(cache=True)
def two_states_path(y, sigma, weighted):
    """Single-trace decode returning (decisions, alpha path, stored-state path)."""
    K = y.shape[0]
    uhat = np.zeros(K, dtype=np.int8)
    alpha_path = np.zeros(K, dtype=np.float64)
    xhat_path = np.zeros(K, dtype=np.int64)
    inv2s2 = 1.0 / (2.0 * sigma * sigma)
    alpha = 1.0
    xhat = 0
    for k in range(K):
        bit, alpha, xhat = two_state_step(alpha, xhat, y[k], inv2s2, weighted)
        uhat[k] = bit
        alpha_path[k] = alpha
        xhat_path[k] = xhat
    return uhat, alpha_path, xhat_path
