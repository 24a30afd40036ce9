"""Independent reference implementations used only as test oracles.

Everything here is deliberately written from scratch (plain Python loops,
``math.erfc`` instead of scipy) so that agreement with the package is a real
cross-check, not a tautology.
"""

import math

import numpy as np


def naive_one_state(y):
    """Single-surviving-state decode via the two-distance comparison."""
    xhat = 0
    out = []
    for yk in y:
        bit = 0 if abs(yk - xhat) <= abs(yk - (xhat + 1)) else 1
        out.append(bit)
        xhat += bit
    return np.array(out, dtype=np.int8)


def naive_two_states(y, sigma, start=(1.0, 0), weighted=True):
    """Two-surviving-states decode, step by step, without exponent shifting.

    Returns (bits, alpha path, stored-state path). ``start`` lets tests begin
    from an arbitrary (alpha, x_hat) pair to probe single-step behavior.
    """
    alpha, xhat = start
    bits, alphas, xhats = [], [], []
    inv = 1.0 / (2.0 * sigma * sigma)
    for yk in y:
        g = [math.exp(-((yk - (xhat + m)) ** 2) * inv) for m in range(3)]
        stay = alpha * g[0] + (1.0 - alpha) * g[1]
        step = alpha * g[1] + (1.0 - alpha) * g[2]
        bit = 0 if stay >= step else 1
        z1 = alpha * g[0]
        z2 = alpha * g[1] + (1.0 - alpha) * g[1] if weighted else g[1]
        z3 = (1.0 - alpha) * g[2]
        if z1 < z3:
            alpha = z2 / (z2 + z3)
            xhat += 1
        else:
            alpha = z1 / (z1 + z2)
        bits.append(bit)
        alphas.append(alpha)
        xhats.append(xhat)
    return np.array(bits, dtype=np.int8), np.array(alphas), np.array(xhats)


def gaussian_upper_tail(a, sigma):
    """P(N(0, sigma^2) > a) through the standard library's erfc."""
    return 0.5 * math.erfc(a / (sigma * math.sqrt(2.0)))


def two_state_survivor_step_mc(alpha, d, sigma, n, seed):
    """Monte Carlo of one survivor update of the two-state decoder.

    True state is taken as 0 without loss of generality, so the stored state
    is d. Returns the sampled (new alpha, new d) pairs.
    """
    rng = np.random.default_rng(seed)
    u = rng.integers(0, 2, n)
    y = u + rng.normal(0.0, sigma, n)
    inv = 1.0 / (2.0 * sigma * sigma)
    e0 = -((y - d) ** 2) * inv
    e1 = -((y - d - 1) ** 2) * inv
    e2 = -((y - d - 2) ** 2) * inv
    m = np.maximum(e0, np.maximum(e1, e2))
    g0, g1, g2 = np.exp(e0 - m), np.exp(e1 - m), np.exp(e2 - m)
    z1, z2, z3 = alpha * g0, g1, (1.0 - alpha) * g2
    lower_dies = z1 < z3
    alpha_new = np.where(lower_dies, z2 / (z2 + z3), z1 / (z1 + z2))
    d_new = d + lower_dies.astype(int) - u
    return alpha_new, d_new


def two_state_decision_error_mc(alpha, d, sigma, n, seed):
    """Monte Carlo probability that the two-state bit decision is wrong at (alpha, d)."""
    rng = np.random.default_rng(seed)
    u = rng.integers(0, 2, n)
    y = u + rng.normal(0.0, sigma, n)
    inv = 1.0 / (2.0 * sigma * sigma)
    g0 = np.exp(-((y - d) ** 2) * inv)
    g1 = np.exp(-((y - d - 1) ** 2) * inv)
    g2 = np.exp(-((y - d - 2) ** 2) * inv)
    stay = alpha * g0 + (1.0 - alpha) * g1
    step = alpha * g1 + (1.0 - alpha) * g2
    uhat = (step > stay).astype(np.int64)
    return float(np.mean(uhat != u))
