"""Asymptotic bit-error-rate analysis of the reduced-state decoders.

Both reduced decoders drag an integer error offset d = x_hat - x_true behind
them. For the one-state decoder, d alone is a Markov chain on the integers
with a tridiagonal transition matrix whose invariant vector has a closed
product form; the long-run BER is the invariant average of the per-state
error probability.

For the two-state decoder the pair (alpha, d) -- stored-state weight plus
error offset -- is a Markov process on [0,1] x Z. Its transition kernel has
closed-form cumulative distributions in the weight coordinate, built from
Gaussian tail probabilities. We discretize the kernel on a uniform weight
grid (midpoint sources, exact CDF differences for the targets), run power
iteration to the invariant distribution, and integrate the per-state error
probability qbar against it.

Gaussian tails are always expressed through the standard complementary error
function: P(N(0, sigma^2) > a) = erfc(a / (sigma * sqrt(2))) / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.special import erfc

__all__ = [
    "ConvergenceError",
    "DiscretizationError",
    "OneStateChain",
    "TruncationError",
    "TwoStateKernelGrid",
    "c_alpha",
    "discretize_kernel",
    "export_one_state_invariant",
    "export_two_state_invariant",
    "invariant_by_iteration",
    "one_state_asymptotic_ber",
    "one_state_invariant",
    "one_state_transitions",
    "qbar",
    "two_state_asymptotic_ber",
    "two_state_kernel_cdf",
    "two_state_kernel_marginals",
]

_SQRT2 = math.sqrt(2.0)


class TruncationError(RuntimeError):
    """The chosen d_max leaves too much invariant mass outside the truncation."""


class DiscretizationError(RuntimeError):
    """A discretized kernel row lost more mass than the tolerance allows."""


class ConvergenceError(RuntimeError):
    """Power iteration did not reach the requested residual."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


# ---------------------------------------------------------------------------
# one-state error chain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OneStateChain:
    """Truncated error chain of the one-state decoder.

    Arrays are indexed by d = -d_max..d_max; ``p_up[i]`` is the averaged
    probability of moving d -> d+1 (a spurious 1 decided on a sent 0) and
    ``p_down[i]`` of d -> d-1 (a missed 1). ``phi`` is the invariant
    probability vector once :func:`one_state_invariant` has filled it.
    """

    sigma: float
    d_max: int
    p_up: np.ndarray
    p_down: np.ndarray
    phi: np.ndarray | None = None

    def d_values(self) -> np.ndarray:
        return np.arange(-self.d_max, self.d_max + 1)

    def index(self, d: int) -> int:
        if not -self.d_max <= d <= self.d_max:
            raise IndexError(f"d={d} outside truncation [-{self.d_max}, {self.d_max}]")
        return d + self.d_max

    def error_probabilities(self) -> np.ndarray:
        """Per-state probability of a wrong bit decision: p_up + p_down."""
        return self.p_up + self.p_down

    def transition_matrix(self) -> np.ndarray:
        """Dense truncated transition matrix; outward boundary mass folds back
        onto the boundary state."""
        n = 2 * self.d_max + 1
        P = np.zeros((n, n))
        for i in range(n):
            up, down = self.p_up[i], self.p_down[i]
            P[i, i] = 1.0 - up - down
            if i + 1 < n:
                P[i, i + 1] = up
            else:
                P[i, i] += up
            if i - 1 >= 0:
                P[i, i - 1] = down
            else:
                P[i, i] += down
        return P


def one_state_transitions(sigma: float, d_max: int = 30) -> OneStateChain:
    """Closed-form transition probabilities of the one-state error chain.

    From offset d the decoder flips a sent 0 into a 1 when the noise exceeds
    d + 1/2, and misses a sent 1 when the noise stays below d - 1/2; averaging
    over the fair input bit gives

        p_up(d)   = erfc((d + 1/2) / (sigma sqrt 2)) / 4
        p_down(d) = 1/2 - erfc((d - 1/2) / (sigma sqrt 2)) / 4
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if d_max < 1:
        raise ValueError("d_max must be at least 1")
    d = np.arange(-d_max, d_max + 1, dtype=np.float64)
    p_up = 0.25 * erfc((d + 0.5) / (_SQRT2 * sigma))
    # 1/2 - erfc(a)/4 == erfc(-a)/4 exactly; the complementary form keeps
    # full precision in the tails
    p_down = 0.25 * erfc((0.5 - d) / (_SQRT2 * sigma))
    p_up.flags.writeable = False
    p_down.flags.writeable = False
    return OneStateChain(sigma=float(sigma), d_max=int(d_max), p_up=p_up, p_down=p_down)


def one_state_invariant(chain: OneStateChain, tail_tol: float = 1e-12) -> OneStateChain:
    """Fill in the invariant probability vector of the error chain.

    phi(d) = phi(0) * prod_{i=1..|d|} p_up(i-1)/p_down(i), normalized; the
    chain is reversible so this is exact, and the vector is symmetric in d.
    Raises :class:`TruncationError` when phi(d_max)/phi(0) exceeds
    ``tail_tol``, i.e. when d_max is too small for this sigma.
    """
    dm = chain.d_max
    # ratios phi(i)/phi(i-1) for i = 1..d_max
    up = chain.p_up[dm : 2 * dm]        # p_up at d = 0..d_max-1
    down = chain.p_down[dm + 1 :]       # p_down at d = 1..d_max
    prods = np.cumprod(up / down)
    tail = prods[-1]
    if tail > tail_tol:
        raise TruncationError(
            f"phi({dm})/phi(0) = {tail:.3e} exceeds {tail_tol:.1e}; increase d_max"
        )
    phi0 = 1.0 / (1.0 + 2.0 * prods.sum())
    phi = np.concatenate([phi0 * prods[::-1], [phi0], phi0 * prods])
    phi /= phi.sum()
    phi.flags.writeable = False
    return replace(chain, phi=phi)


def one_state_asymptotic_ber(chain: OneStateChain) -> float:
    """Long-run BER of the one-state decoder: invariant average of p_up + p_down."""
    if chain.phi is None:
        raise ValueError("chain has no invariant vector; call one_state_invariant first")
    return float((chain.error_probabilities() * chain.phi).sum())


def export_one_state_invariant(chain: OneStateChain, path) -> None:
    """Write the invariant vector as CSV rows ``d,phi`` (17 significant digits)."""
    if chain.phi is None:
        raise ValueError("chain has no invariant vector; call one_state_invariant first")
    lines = ["d,phi"]
    for d, p in zip(chain.d_values(), chain.phi):
        lines.append(f"{int(d)},{p:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# two-state kernel: closed-form ingredients
# ---------------------------------------------------------------------------


def c_alpha(alpha: float, sigma: float) -> float:
    """Scale constant sqrt(exp(1/sigma^2) / (alpha (1 - alpha))) of the kernel
    branch thresholds; always > 2."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    return math.sqrt(math.exp(1.0 / sigma**2) / (alpha * (1.0 - alpha)))


def _H(x: float, y: float, z: float, sigma: float) -> float:
    """Half-erfc building block of the kernel CDFs, nondecreasing in z on (0, 1].

    H = erfc(h)/2 with h = (sigma^2 log(x (1-z)/z) + y + 1/2) / (sigma sqrt 2).
    """
    if z <= 0.0:
        return 0.0
    if z >= 1.0:
        return 1.0
    h = (sigma**2 * math.log(x * (1.0 - z) / z) + y + 0.5) / (sigma * _SQRT2)
    return 0.5 * erfc(h)


def two_state_kernel_cdf(
    alpha: float, d: int, beta: float, d_prime: int, sigma: float
) -> float:
    """P( next weight <= beta and next offset == d_prime | current (alpha, d) ).

    The weight coordinate is the stored probability of the lower surviving
    state. Only d_prime in {d-1, d, d+1} is reachable; anything else returns
    0. The closed forms split at the thresholds 1/(1+c) and c/(1+c) with
    c = c_alpha(alpha, sigma); the function is continuous across them and in
    alpha at the endpoints 0 and 1.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if d_prime not in (d - 1, d, d + 1):
        return 0.0

    if alpha == 0.0 or alpha == 1.0:
        # degenerate weight: the pair collapses to a single state
        if d_prime == d:
            return 0.5 * _H(1.0, d, beta, sigma)
        if d_prime == d + 1:
            return 0.0 if alpha == 1.0 else 0.5 * _H(1.0, d + 1, beta, sigma)
        return 0.0 if alpha == 0.0 else 0.5 * _H(1.0, d - 1, beta, sigma)

    # Work with h = p(x, y) + q(z) and apply the branch caps min(beta, hi) /
    # max(beta, lo) directly on q. Since (1-lo)/lo = c and (1-hi)/hi = 1/c,
    # the caps only need log c, which stays finite for every sigma (c itself
    # overflows once sigma drops below ~0.06).
    s2 = sigma * sigma
    scale = sigma / _SQRT2
    log_c = 0.5 * (1.0 / s2 - math.log(alpha) - math.log1p(-alpha))
    q_lo = scale * log_c
    q_hi = -q_lo
    if beta >= 1.0:
        q_beta = -math.inf
    else:
        q_beta = scale * (math.log1p(-beta) - math.log(beta))

    x_low = s2 * math.log(alpha)  # x = alpha
    x_high = -s2 * math.log1p(-alpha)  # x = 1/(1-alpha)

    def H_at(logx_term: float, y: float, q: float) -> float:
        return 0.5 * erfc((logx_term + y + 0.5) / (sigma * _SQRT2) + q)

    if d_prime == d:
        return 0.5 * (
            H_at(x_low, d, min(q_beta, q_lo))
            - H_at(x_low, d, q_lo)
            + H_at(x_high, d, max(q_beta, q_hi))
        )
    if d_prime == d + 1:
        return 0.5 * H_at(x_high, d + 1, max(q_beta, q_hi))
    return 0.5 * (H_at(x_low, d - 1, min(q_beta, q_lo)) - H_at(x_low, d - 1, q_lo))


def two_state_kernel_marginals(alpha: float, d: int, sigma: float) -> tuple[float, float]:
    """Full-weight marginals: P(offset -> d+1) and P(offset -> d-1).

    Both lie in [0, 1/2]; the first decreases and the second increases in
    alpha.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if alpha == 0.0:
        L = -math.inf
    elif alpha == 1.0:
        L = math.inf
    else:
        L = sigma**2 * math.log(math.sqrt(alpha / (1.0 - alpha)))
    up = 0.25 * erfc((L + d + 1) / (sigma * _SQRT2))
    down = 0.25 * erfc(-(L + d) / (sigma * _SQRT2))  # == 1/2 - erfc((L+d)/..)/4
    return float(up), float(down)


# ---------------------------------------------------------------------------
# kernel discretization and invariant distribution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoStateKernelGrid:
    """Discretized (weight, offset) kernel.

    The state space is n_bins uniform weight bins times offsets
    -d_max..d_max; state (bin i, offset d) has flat index
    (d + d_max) * n_bins + i. ``matrix`` is row-stochastic CSR; rows were
    built from the bin-midpoint source point and exact CDF differences at the
    bin edges, with any sub-tolerance row deficit repaired onto the row's
    largest entry (``max_row_deficit`` records the worst pre-repair deficit).
    ``phi_tilde`` holds the invariant distribution once
    :func:`invariant_by_iteration` has filled it.
    """

    sigma: float
    d_max: int
    n_bins: int
    matrix: sp.csr_matrix
    max_row_deficit: float
    phi_tilde: np.ndarray | None = None

    def alpha_edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_bins + 1)

    def alpha_midpoints(self) -> np.ndarray:
        edges = self.alpha_edges()
        return 0.5 * (edges[:-1] + edges[1:])

    def d_values(self) -> np.ndarray:
        return np.arange(-self.d_max, self.d_max + 1)

    def phi_matrix(self) -> np.ndarray:
        """Invariant mass reshaped to (offset, weight-bin)."""
        if self.phi_tilde is None:
            raise ValueError("grid has no invariant distribution yet")
        return self.phi_tilde.reshape(2 * self.d_max + 1, self.n_bins)


def discretize_kernel(
    sigma: float,
    n_bins: int = 128,
    d_max: int = 30,
    deficit_tol: float = 1e-6,
) -> TwoStateKernelGrid:
    """Build the row-stochastic transition matrix of the discretized kernel.

    Each source state is represented by its bin midpoint; the mass it sends
    into (target bin, target offset) is the exact CDF difference at the bin
    edges. Offset moves past +-d_max fold onto the boundary offset. Rows sum
    to 1 up to floating-point residue; deficits above ``deficit_tol`` raise
    :class:`DiscretizationError`, smaller ones are repaired onto the row's
    largest entry.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if n_bins < 8:
        raise ValueError("n_bins must be at least 8")
    if d_max < 2:
        raise ValueError("d_max must be at least 2")

    s2 = sigma * sigma
    scale = sigma / _SQRT2
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    dvals = np.arange(-d_max, d_max + 1)
    nd = dvals.size

    # h(x, y, z) separates into p(x, y) + q(z); the beta-branch caps
    # min(z, hi) / max(z, lo) act on q alone, with q(lo) = -q(hi) =
    # sigma*log(c)/sqrt(2) taken from log c directly (c overflows for small
    # sigma, its log never does).
    with np.errstate(divide="ignore"):
        q_edges = scale * (np.log1p(-edges) - np.log(edges))  # +inf at 0, -inf at 1
    log_c = 0.5 * (1.0 / s2 - np.log(mids) - np.log1p(-mids))
    q_at_lo = (scale * log_c)[:, None]
    q_lo = np.minimum(q_edges[None, :], q_at_lo)  # (n_bins, n_bins+1)
    q_hi = np.maximum(q_edges[None, :], -q_at_lo)
    log_m = np.log(mids)[:, None]
    log_inv = -np.log1p(-mids)[:, None]

    def p_of(logx: np.ndarray, y: float) -> np.ndarray:
        return (s2 * logx + y + 0.5) / (sigma * _SQRT2)

    bin_idx = np.arange(n_bins)
    rows, cols, data = [], [], []
    for di, d in enumerate(dvals):
        cdf_same = 0.5 * (
            0.5 * erfc(p_of(log_m, d) + q_lo)
            - 0.5 * erfc(p_of(log_m, d) + q_at_lo)
            + 0.5 * erfc(p_of(log_inv, d) + q_hi)
        )
        cdf_up = 0.25 * erfc(p_of(log_inv, d + 1) + q_hi)
        cdf_down = 0.5 * (
            0.5 * erfc(p_of(log_m, d - 1) + q_lo) - 0.5 * erfc(p_of(log_m, d - 1) + q_at_lo)
        )
        for move, cdf in ((0, cdf_same), (1, cdf_up), (-1, cdf_down)):
            mass = np.diff(cdf, axis=1)
            target = min(max(d + move, -d_max), d_max)  # fold past the truncation
            rows.append(np.repeat(bin_idx + di * n_bins, n_bins))
            cols.append(np.tile(bin_idx + (target + d_max) * n_bins, n_bins))
            data.append(mass.ravel())

    n_states = nd * n_bins
    P = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_states, n_states),
    ).tocsr()

    if (np.diff(P.indptr) == 0).any():
        raise DiscretizationError("a kernel row lost all of its mass")
    row_sums = np.add.reduceat(P.data, P.indptr[:-1])
    worst = float(np.abs(1.0 - row_sums).max())
    if worst > deficit_tol:
        raise DiscretizationError(
            f"row deficit {worst:.3e} exceeds {deficit_tol:.1e}; kernel mass lost"
        )
    _repair_rows(P)
    return TwoStateKernelGrid(
        sigma=float(sigma),
        d_max=int(d_max),
        n_bins=int(n_bins),
        matrix=P,
        max_row_deficit=worst,
    )


def _repair_rows(P: sp.csr_matrix) -> None:
    """Push each row's deficit onto its largest entry until the sum is exactly 1.

    The sum is taken in storage order (the order sparse matvecs accumulate
    in), so downstream row sums see exactly 1.
    """
    for i in range(P.shape[0]):
        seg = P.data[P.indptr[i] : P.indptr[i + 1]]
        target = np.argmax(seg)
        for _ in range(32):
            s = np.add.reduce(seg)
            if s == 1.0:
                break
            seg[target] += 1.0 - s
        else:
            raise DiscretizationError(f"row {i} sum failed to settle at 1")


def invariant_by_iteration(
    grid: TwoStateKernelGrid,
    tol: float = 1e-10,
    max_iters: int = 10**6,
    start: str | np.ndarray = "uniform",
    tail_tol: float = 1e-8,
) -> TwoStateKernelGrid:
    """Power-iterate the discretized kernel to its invariant distribution.

    Starts from the uniform distribution (or ``"decoder_start"``: the point
    mass at the decoder's actual initial state, weight 1 and offset 0, or any
    explicit probability vector) and applies the transition matrix until
    successive iterates differ by less than ``tol`` in L1. Raises
    :class:`ConvergenceError` on iteration exhaustion and
    :class:`TruncationError` when the converged distribution leaves more than
    ``tail_tol`` mass on the boundary offsets.
    """
    n_states = grid.matrix.shape[0]
    if isinstance(start, str):
        if start == "uniform":
            v = np.full(n_states, 1.0 / n_states)
        elif start == "decoder_start":
            # point mass at the decoder's true initial state: weight 1, offset 0
            v = np.zeros(n_states)
            v[grid.d_max * grid.n_bins + (grid.n_bins - 1)] = 1.0
        else:
            raise ValueError(f"unknown start {start!r}")
    else:
        v = np.asarray(start, dtype=np.float64)
        if v.shape != (n_states,) or v.min() < 0 or not math.isclose(v.sum(), 1.0, rel_tol=1e-9):
            raise ValueError("start must be a probability vector over the grid")
        v = v / v.sum()

    PT = grid.matrix.T.tocsr()
    residual = math.inf
    for iteration in range(1, max_iters + 1):
        v_next = PT @ v
        v_next /= v_next.sum()
        residual = float(np.abs(v_next - v).sum())
        v = v_next
        if residual < tol:
            break
    else:
        raise ConvergenceError(
            f"power iteration failed to reach {tol:.1e} in {max_iters} steps "
            f"(final residual {residual:.3e})",
            residual=residual,
            iterations=max_iters,
        )

    phi = v.reshape(2 * grid.d_max + 1, grid.n_bins)
    tail = float(phi[0].sum() + phi[-1].sum())
    if tail > tail_tol:
        raise TruncationError(
            f"invariant mass {tail:.3e} on |d| = {grid.d_max} exceeds {tail_tol:.1e}; "
            "increase d_max"
        )
    v.flags.writeable = False
    return replace(grid, phi_tilde=v)


def export_two_state_invariant(grid: TwoStateKernelGrid, path) -> None:
    """Write the invariant distribution as CSV rows
    ``alpha_bin_low,alpha_bin_high,d,phi_mass`` (17 significant digits)."""
    phi = grid.phi_matrix()
    edges = grid.alpha_edges()
    lines = ["alpha_bin_low,alpha_bin_high,d,phi_mass"]
    for di, d in enumerate(grid.d_values()):
        for i in range(grid.n_bins):
            lines.append(f"{edges[i]:.17g},{edges[i + 1]:.17g},{int(d)},{phi[di, i]:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# per-state error probability and the BER integral
# ---------------------------------------------------------------------------


def _log_root(alpha: float, s: float) -> float:
    """log of the positive root of (1-a) e^{-s} z^2 + (2a-1) z - a = 0.

    The root lies in [1, e^s]. Evaluated in whichever of the two quadratic
    forms avoids cancellation, entirely in logs, so it stays finite for any
    noise level.
    """
    b = 2.0 * alpha - 1.0
    if b > 0.0:
        t = 4.0 * alpha * (1.0 - alpha) * math.exp(-s)
        return math.log(2.0 * alpha) - math.log(b + math.sqrt(b * b + t))
    t = 4.0 * alpha * (1.0 - alpha) * math.exp(-s)
    if t > 0.0:
        return s + math.log(-b + math.sqrt(b * b + t)) - math.log(2.0 * (1.0 - alpha))
    if b < 0.0:  # e^{-s} underflowed; the sqrt collapses to -b
        return s + math.log(-2.0 * b) - math.log(2.0 * (1.0 - alpha))
    # alpha exactly 1/2 with e^{-s} underflowed: sqrt(t) in logs
    return 0.5 * s + 0.5 * math.log(4.0 * alpha * (1.0 - alpha)) - math.log(2.0 * (1.0 - alpha))


def _decision_shift(alpha: float, sigma: float) -> float:
    """sigma^2 log z1: the shift the stored weight applies to the decision
    threshold. 0 at alpha=1, 1 at alpha=0, in [0, 1] throughout."""
    if alpha >= 1.0 - 1e-12:
        return 0.0
    if alpha <= 1e-12:
        return 1.0
    s = 1.0 / (sigma * sigma)
    lam = _log_root(alpha, s) / s
    return min(1.0, max(0.0, lam))


def qbar(alpha: float, d: int, sigma: float) -> float:
    """Probability that the two-state decoder's next bit decision is wrong,
    given stored weight alpha and error offset d.

    The two mixture likelihoods cross at a single observation threshold
    determined by the positive quadratic root z1; the error probability is
    the Gaussian mass on the wrong side for each input bit, averaged:

        qbar = [ erfc((L + d + 1/2)/(sigma sqrt 2))/2
                 + 1 - erfc((L + d - 1/2)/(sigma sqrt 2))/2 ] / 2,
        L = sigma^2 log z1.

    At alpha = 1 this is exactly the one-state per-state error probability.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    L = _decision_shift(alpha, sigma)
    up = 0.5 * erfc((L + d + 0.5) / (sigma * _SQRT2))
    # 1 - erfc(a)/2 == erfc(-a)/2 exactly (full precision in the tails)
    down = 0.5 * erfc((0.5 - L - d) / (sigma * _SQRT2))
    return float(0.5 * (up + down))


def two_state_asymptotic_ber(grid: TwoStateKernelGrid, sigma: float | None = None) -> float:
    """Long-run BER of the two-state decoder: integral of qbar against the
    invariant distribution, evaluated at the grid's bin midpoints."""
    if grid.phi_tilde is None:
        raise ValueError("grid has no invariant distribution; call invariant_by_iteration")
    if sigma is None:
        sigma = grid.sigma
    elif not math.isclose(sigma, grid.sigma, rel_tol=1e-12):
        raise ValueError(f"sigma {sigma} does not match the grid's (built at {grid.sigma})")
    mids = grid.alpha_midpoints()
    # the decision shift depends only on the weight, not the offset
    shifts = np.array([_decision_shift(a, sigma) for a in mids])
    dvals = grid.d_values()[:, None].astype(np.float64)
    arg_up = (shifts[None, :] + dvals + 0.5) / (sigma * _SQRT2)
    arg_down = (0.5 - shifts[None, :] - dvals) / (sigma * _SQRT2)
    q = 0.25 * (erfc(arg_up) + erfc(arg_down))
    return float((q * grid.phi_matrix()).sum())
