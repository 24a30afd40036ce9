"""Decoders for the binary-input integrator observed through AWGN.

Four decoders, in decreasing complexity and reliability:

* ``bcjr_decode``        -- bit-MAP decisions from the full forward/backward
                            recursion over the counting trellis (states 0..K).
* ``cbcjr_decode``       -- causal variant with decision delay k0: bit k-1 is
                            decided from observations y_1..y_{k+k0}.
* ``two_states_decode``  -- keeps the two most probable adjacent states and a
                            single normalized weight.
* ``one_state_decode``   -- keeps only the most probable state; reduces to a
                            half-integer threshold on each sample.

``exhaustive_bitmap_oracle`` computes the same bit-MAP decisions by direct
enumeration of all input words (or all prefixes, for the causal variant) and
exists solely to cross-check the trellis implementations at small K.

Every decision rule resolves ties to bit 0, so outputs are reproducible
bit-for-bit. Forward/backward vectors are renormalized to unit sum at every
step; decisions depend only on ratios, so this is a pure stabilization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fast
from .channel import ObservationTrace

__all__ = [
    "DECODER_NAMES",
    "ErrorReport",
    "TrellisPosteriors",
    "bcjr_decode",
    "bcjr_decode_batch",
    "bit_error_rate",
    "bit_error_rate_batch",
    "cbcjr_decode",
    "cbcjr_decode_batch",
    "decisions_from_posteriors",
    "exhaustive_bitmap_oracle",
    "one_state_decode",
    "reduced_state_step_dump",
    "trellis_posteriors",
    "two_states_decode",
]

DECODER_NAMES = ("bcjr", "cbcjr", "one_state", "two_states")

_ORACLE_MAX_K = 20


def _check_trace(trace: ObservationTrace) -> None:
    if len(trace) == 0:
        raise ValueError("empty observation trace")
    if trace.sigma <= 0:
        raise ValueError("sigma must be positive")


def _scaled_gammas(y_col: np.ndarray, states: np.ndarray, inv2s2: float) -> np.ndarray:
    """Transition likelihoods exp(-(y - j)^2 / (2 sigma^2)) for every target state.

    Each row is rescaled so its largest entry is 1 (per-step positive scaling,
    which decisions are invariant to); this keeps products representable.
    """
    d = y_col[:, None] - states[None, :]
    e = -(d * d) * inv2s2
    e -= e.max(axis=1, keepdims=True)
    return np.exp(e)


def _unit_rows(v: np.ndarray) -> np.ndarray:
    s = v.sum(axis=-1, keepdims=True)
    if not (s > 0).all():
        raise FloatingPointError("trellis mass vanished; trace is not decodable")
    return v / s


# ---------------------------------------------------------------------------
# full forward/backward decoder
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrellisPosteriors:
    """Forward/backward quantities of one decode.

    alpha[k, i] and beta[k, i] are the forward and backward vectors after
    per-step renormalization (each row sums to 1 when built with
    ``normalize=True``). gamma rows carry a per-step positive rescaling.
    gamma_diag[k-1, i] is the i -> i transition likelihood at step k and
    gamma_super[k-1, i] the i -> i+1 one; all other transitions are zero.
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma_diag: np.ndarray
    gamma_super: np.ndarray


def trellis_posteriors(trace: ObservationTrace, normalize: bool = True) -> TrellisPosteriors:
    """Run the forward and backward recursions over the counting trellis.

    ``normalize=False`` skips the per-step renormalization and is only usable
    at small K before the raw products underflow; it exists to check that
    decisions are scale-invariant.
    """
    _check_trace(trace)
    y = trace.samples
    K = len(trace)
    S = K + 1
    states = np.arange(S, dtype=np.float64)
    inv2s2 = 1.0 / (2.0 * trace.sigma**2)

    gd = _scaled_gammas(y, states, inv2s2)  # row k-1 holds step k's target likelihoods
    gs = np.zeros_like(gd)
    gs[:, :-1] = gd[:, 1:]

    alpha = np.zeros((K + 1, S))
    alpha[0, 0] = 1.0
    for k in range(1, K + 1):
        prev = alpha[k - 1]
        acc = prev.copy()
        acc[1:] += prev[:-1]
        a = gd[k - 1] * acc
        alpha[k] = _unit_rows(a) if normalize else a

    beta = np.zeros((K + 1, S))
    beta[K] = 1.0 / S if normalize else 1.0
    for k in range(K, 0, -1):
        gb = gd[k - 1] * beta[k]
        b = gb.copy()
        b[:-1] += gb[1:]
        beta[k - 1] = _unit_rows(b) if normalize else b

    return TrellisPosteriors(alpha=alpha, beta=beta, gamma_diag=gd, gamma_super=gs)


def decisions_from_posteriors(tp: TrellisPosteriors) -> np.ndarray:
    """Bit decisions from stored posteriors: compare the two transition-mass sums."""
    K = tp.gamma_diag.shape[0]
    uhat = np.zeros(K, dtype=np.int8)
    for k in range(1, K + 1):
        a = tp.alpha[k - 1]
        gb = tp.gamma_diag[k - 1] * tp.beta[k]
        s_stay = (a * gb).sum()
        s_up = (a[:-1] * gb[1:]).sum()
        uhat[k - 1] = 1 if s_up > s_stay else 0
    return uhat


def bcjr_decode_batch(Y: np.ndarray, sigma: float, chunk_size: int = 256) -> np.ndarray:
    """Bit-MAP decode of a (n, K) observation block; rows are independent traces."""
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    n, K = Y.shape
    if K == 0:
        raise ValueError("empty observation trace")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    out = np.empty((n, K), dtype=np.int8)
    for lo in range(0, n, chunk_size):
        out[lo : lo + chunk_size] = _bcjr_chunk(Y[lo : lo + chunk_size], sigma)
    return out


def _bcjr_chunk(Y: np.ndarray, sigma: float) -> np.ndarray:
    n, K = Y.shape
    S = K + 1
    states = np.arange(S, dtype=np.float64)
    inv2s2 = 1.0 / (2.0 * sigma**2)

    g = np.empty((K, n, S))
    alpha = np.empty((K + 1, n, S))
    alpha[0] = 0.0
    alpha[0, :, 0] = 1.0
    for k in range(1, K + 1):
        gk = _scaled_gammas(Y[:, k - 1], states, inv2s2)
        g[k - 1] = gk
        prev = alpha[k - 1]
        acc = prev.copy()
        acc[:, 1:] += prev[:, :-1]
        alpha[k] = _unit_rows(gk * acc)

    uhat = np.empty((n, K), dtype=np.int8)
    beta = np.full((n, S), 1.0 / S)
    for k in range(K, 0, -1):
        gb = g[k - 1] * beta
        a = alpha[k - 1]
        s_stay = (a * gb).sum(axis=1)
        s_up = (a[:, :-1] * gb[:, 1:]).sum(axis=1)
        uhat[:, k - 1] = s_up > s_stay
        b = gb.copy()
        b[:, :-1] += gb[:, 1:]
        beta = _unit_rows(b)
    return uhat


def bcjr_decode(trace: ObservationTrace) -> np.ndarray:
    """Bit-MAP decisions from the full forward/backward recursion."""
    _check_trace(trace)
    return bcjr_decode_batch(trace.samples[None, :], trace.sigma)[0]


# ---------------------------------------------------------------------------
# causal decoder with delay k0
# ---------------------------------------------------------------------------


def cbcjr_decode_batch(
    Y: np.ndarray, sigma: float, k0: int, chunk_size: int = 256
) -> np.ndarray:
    """Causal decode of a (n, K) block: bit k-1 uses observations up to k+k0."""
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    n, K = Y.shape
    if K == 0:
        raise ValueError("empty observation trace")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not 0 <= k0 <= K:
        raise ValueError(f"decision delay k0 must be in [0, K]={K}, got {k0}")
    out = np.empty((n, K), dtype=np.int8)
    for lo in range(0, n, chunk_size):
        out[lo : lo + chunk_size] = _cbcjr_chunk(Y[lo : lo + chunk_size], sigma, k0)
    return out


def _cbcjr_chunk(Y: np.ndarray, sigma: float, k0: int) -> np.ndarray:
    n, K = Y.shape
    S = K + 1
    states = np.arange(S, dtype=np.float64)
    inv2s2 = 1.0 / (2.0 * sigma**2)

    g = np.empty((K, n, S))
    for k in range(K):
        g[k] = _scaled_gammas(Y[:, k], states, inv2s2)

    uhat = np.empty((n, K), dtype=np.int8)
    a = np.zeros((n, S))
    a[:, 0] = 1.0
    for k in range(1, K + 1):
        gk = g[k - 1]
        # truncated backward vector over the lookahead window y_{k+1}..y_m;
        # for k > K - k0 the window ends at K and this is the classical full
        # backward recursion.
        m = min(k + k0, K)
        b = np.ones((n, S))
        for j in range(m - 1, k - 1, -1):
            gb = g[j] * b
            b = gb.copy()
            b[:, :-1] += gb[:, 1:]
            b = _unit_rows(b)
        gb = gk * b
        s_stay = (a * gb).sum(axis=1)
        s_up = (a[:, :-1] * gb[:, 1:]).sum(axis=1)
        uhat[:, k - 1] = s_up > s_stay
        acc = a.copy()
        acc[:, 1:] += a[:, :-1]
        a = _unit_rows(gk * acc)
    return uhat


def cbcjr_decode(trace: ObservationTrace, k0: int) -> np.ndarray:
    """Causal bit-MAP decisions with decision delay k0 (k0 = K recovers bcjr_decode)."""
    _check_trace(trace)
    return cbcjr_decode_batch(trace.samples[None, :], trace.sigma, k0)[0]


# ---------------------------------------------------------------------------
# reduced-state decoders
# ---------------------------------------------------------------------------


def one_state_decode(trace: ObservationTrace, return_path: bool = False):
    """Single-surviving-state decode: threshold each sample at x_hat + 1/2.

    With ``return_path`` also returns the estimated-state path after each step.
    """
    _check_trace(trace)
    if return_path:
        uhat, xpath = _fast.one_state_path(trace.samples)
        return uhat, xpath
    return _fast.one_state_batch(trace.samples[None, :])[0]


def two_states_decode(
    trace: ObservationTrace,
    middle_mass: str = "weighted",
    return_path: bool = False,
):
    """Two-surviving-states decode.

    The middle candidate state x_hat+1 is reachable from both survivors; its
    mass is the weighted sum of the two incoming branches
    (``middle_mass="weighted"``, the default). For this channel the branch
    likelihoods into a state are equal, so ``"plain"`` (the single likelihood,
    unweighted) is mathematically the same quantity; the switch exists to make
    that checkable.

    With ``return_path`` also returns the per-step (alpha, x_hat) paths.
    """
    _check_trace(trace)
    weighted = _middle_mass_flag(middle_mass)
    if return_path:
        uhat, apath, xpath = _fast.two_states_path(trace.samples, trace.sigma, weighted)
        return uhat, apath, xpath
    return _fast.two_states_batch(trace.samples[None, :], trace.sigma, weighted)[0]


def _middle_mass_flag(middle_mass: str) -> bool:
    if middle_mass == "weighted":
        return True
    if middle_mass == "plain":
        return False
    raise ValueError(f"middle_mass must be 'weighted' or 'plain', got {middle_mass!r}")


def reduced_state_step_dump(trace: ObservationTrace, decoder: str) -> str:
    """Debug dump for the reduced-state decoders: ``k decision alpha x_hat`` lines."""
    if decoder == "one_state":
        uhat, xpath = one_state_decode(trace, return_path=True)
        apath = np.ones(len(trace))
    elif decoder == "two_states":
        uhat, apath, xpath = two_states_decode(trace, return_path=True)
    else:
        raise ValueError(f"unknown reduced-state decoder {decoder!r}")
    lines = [
        f"{k + 1} {int(uhat[k])} {apath[k]:.17g} {int(xpath[k])}" for k in range(len(trace))
    ]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------


def exhaustive_bitmap_oracle(trace: ObservationTrace, k0: int | None = None) -> np.ndarray:
    """Bit-MAP decisions by enumerating all 2^K input words.

    With ``k0`` given, bit k-1 is decided from the posterior given only
    y_1..y_{k+k0} (marginalizing over every word; the unobserved suffix bits
    carry uniform weight and cancel, so this equals prefix marginalization).
    Cost and memory are O(2^K * K): K is capped at 20.
    """
    _check_trace(trace)
    cum = _oracle_cumulative_loglik(trace)
    return _oracle_decisions(cum, _oracle_words(len(trace)), k0)


def _oracle_words(K: int) -> np.ndarray:
    if K > _ORACLE_MAX_K:
        raise ValueError(f"oracle limited to K <= {_ORACLE_MAX_K}, got {K}")
    idx = np.arange(1 << K, dtype=np.uint32)
    return ((idx[:, None] >> np.arange(K, dtype=np.uint32)[None, :]) & 1).astype(np.int8)


def _oracle_cumulative_loglik(trace: ObservationTrace) -> np.ndarray:
    """Per-word log-likelihood of the observation prefix ending at each step."""
    words = _oracle_words(len(trace))
    states = words.cumsum(axis=1, dtype=np.int32)
    resid = trace.samples[None, :] - states
    ll = -(resid * resid) / (2.0 * trace.sigma**2)
    return np.cumsum(ll, axis=1, out=ll)


def _oracle_decisions(cum: np.ndarray, words: np.ndarray, k0: int | None) -> np.ndarray:
    K = words.shape[1]
    if k0 is not None and k0 < 0:
        raise ValueError("k0 must be nonnegative")
    uhat = np.zeros(K, dtype=np.int8)
    ones = words.astype(np.float64)
    for b in range(K):
        w_end = K if k0 is None else min(b + 1 + k0, K)
        col = cum[:, w_end - 1]
        w = np.exp(col - col.max())
        p1 = w @ ones[:, b]
        p0 = w @ (1.0 - ones[:, b])
        uhat[b] = 1 if p1 > p0 else 0
    return uhat


# ---------------------------------------------------------------------------
# error metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorReport:
    """Bit-error tally: ber == bit_errors / bits_total."""

    ber: float
    bit_errors: int
    bits_total: int
    per_trial_errors: np.ndarray | None = None


def bit_error_rate(u: np.ndarray, u_hat: np.ndarray) -> ErrorReport:
    """Hamming distance between sent and decoded words, divided by their length."""
    u = np.asarray(u)
    u_hat = np.asarray(u_hat)
    if u.shape != u_hat.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {u_hat.shape}")
    if u.size == 0:
        raise ValueError("empty words")
    errors = int((u != u_hat).sum())
    return ErrorReport(ber=errors / u.size, bit_errors=errors, bits_total=int(u.size))


def bit_error_rate_batch(U: np.ndarray, U_hat: np.ndarray) -> ErrorReport:
    """Aggregate error report over a (trials, K) block, keeping per-trial counts."""
    U = np.asarray(U)
    U_hat = np.asarray(U_hat)
    if U.shape != U_hat.shape:
        raise ValueError(f"shape mismatch: {U.shape} vs {U_hat.shape}")
    per_trial = (U != U_hat).sum(axis=1)
    errors = int(per_trial.sum())
    total = int(U.size)
    return ErrorReport(
        ber=errors / total,
        bit_errors=errors,
        bits_total=total,
        per_trial_errors=per_trial,
    )
