"""Monte Carlo harness: sweeps, single-sequence error rates, analytic
cross-checks, oracle verification, and result persistence.

Seeding: every trial draws its input-bit seed and noise seed from
:func:`trial_seed`, a pure function of (master seed, swept parameter, trial
index, stream tag). Decoders share each trial's realization, so comparisons
between decoders are paired, dropping a decoder from a sweep cannot change
any other decoder's numbers, and identical configurations reproduce results
byte for byte regardless of batching.
"""

from __future__ import annotations

import math
import os
import tempfile
import time
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import _fast
from .analysis import (
    discretize_kernel,
    invariant_by_iteration,
    one_state_asymptotic_ber,
    one_state_invariant,
    one_state_transitions,
    two_state_asymptotic_ber,
)
from .channel import ChannelParams, add_noise, encode, format_trace_dump, generate_input, sigma_to_snr, simulate_trace
from .decoders import (
    DECODER_NAMES,
    ErrorReport,
    _middle_mass_flag,
    _oracle_cumulative_loglik,
    _oracle_decisions,
    _oracle_words,
    bcjr_decode,
    bcjr_decode_batch,
    bit_error_rate,
    bit_error_rate_batch,
    cbcjr_decode,
    cbcjr_decode_batch,
)

__all__ = [
    "CSV_HEADER",
    "DEFAULT_SNR_GRID",
    "OracleCheckReport",
    "OracleMismatch",
    "ResultRow",
    "SweepConfig",
    "compare_analytic",
    "emit_plot_data",
    "gap_db",
    "make_run_dir",
    "oracle_check",
    "read_rows_csv",
    "run_cber",
    "run_sweep",
    "snr_at_ber",
    "trial_seed",
    "write_rows_csv",
]

CSV_HEADER = "snr_db,sigma,decoder,ber,std_err,trials,bits_per_trial,master_seed,analytic_ber"

DEFAULT_SNR_GRID = tuple(float(s) for s in range(-5, 16))

_SEED_MASK = (1 << 64) - 1
_INPUT = 0
_NOISE = 1

REDUCED_DECODERS = ("one_state", "two_states")


def trial_seed(master_seed: int, scope: float, trial: int, stream: int) -> int:
    """Derive one 64-bit seed as a pure function of its coordinates.

    ``scope`` is the swept parameter (SNR in dB for sweeps, sigma elsewhere),
    keyed by its exact float64 bit pattern; ``stream`` separates the input-bit
    stream (0) from the noise stream (1).
    """
    bits = int(np.float64(scope).view(np.uint64))
    ss = np.random.SeedSequence((master_seed & _SEED_MASK, bits, trial, stream))
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# configuration and result rows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    """One BER-vs-SNR sweep: the experiment grid, decoder set, and seeding."""

    snr_db_list: tuple[float, ...] = DEFAULT_SNR_GRID
    trials: int = 5000
    bits_per_trial: int = 100
    decoders: tuple[str, ...] = DECODER_NAMES
    k0: int = 0
    master_seed: int = 0
    output_path: str | Path | None = None

    def __post_init__(self):
        object.__setattr__(self, "snr_db_list", tuple(float(s) for s in self.snr_db_list))
        object.__setattr__(self, "decoders", tuple(self.decoders))
        if not self.snr_db_list:
            raise ValueError("snr_db_list must be nonempty")
        if not self.decoders:
            raise ValueError("decoders must be nonempty")
        for name in self.decoders:
            if name not in DECODER_NAMES:
                raise ValueError(f"unknown decoder {name!r}; choose from {DECODER_NAMES}")
        if self.trials < 1 or self.bits_per_trial < 1:
            raise ValueError("trials and bits_per_trial must be positive")
        if not 0 <= self.k0 <= self.bits_per_trial:
            raise ValueError("k0 must lie in [0, bits_per_trial]")
        if self.trials * self.bits_per_trial < 1000:
            warnings.warn(
                f"only {self.trials * self.bits_per_trial} bits per point; "
                "BER estimates will be statistically weak",
                stacklevel=2,
            )


@dataclass(frozen=True)
class ResultRow:
    """One (SNR, decoder) measurement; std_err is the binomial standard error."""

    snr_db: float
    sigma: float
    decoder: str
    ber: float
    std_err: float
    trials: int
    bits_per_trial: int
    master_seed: int
    analytic_ber: float | None = None


def _binomial_stderr(ber: float, total_bits: int) -> float:
    return math.sqrt(ber * (1.0 - ber) / total_bits)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def _generate_block(
    snr_db: float, trials: int, K: int, master_seed: int
) -> tuple[np.ndarray, np.ndarray, ChannelParams]:
    params = ChannelParams.from_snr_db(snr_db)
    U = np.empty((trials, K), dtype=np.int8)
    Y = np.empty((trials, K), dtype=np.float64)
    for t in range(trials):
        u = generate_input(K, trial_seed(master_seed, snr_db, t, _INPUT))
        x = encode(u)
        trace = add_noise(x, params, trial_seed(master_seed, snr_db, t, _NOISE))
        U[t] = u
        Y[t] = trace.samples
    return U, Y, params


def _decode_block(
    name: str, Y: np.ndarray, sigma: float, k0: int, chunk_size: int, weighted: bool
) -> np.ndarray:
    if name == "bcjr":
        return bcjr_decode_batch(Y, sigma, chunk_size=chunk_size)
    if name == "cbcjr":
        return cbcjr_decode_batch(Y, sigma, k0, chunk_size=chunk_size)
    if name == "one_state":
        return _fast.one_state_batch(Y)
    if name == "two_states":
        return _fast.two_states_batch(Y, sigma, weighted)
    raise ValueError(f"unknown decoder {name!r}")


def run_sweep(
    config: SweepConfig, chunk_size: int = 256, middle_mass: str = "weighted"
) -> list[ResultRow]:
    """Run the configured sweep and return rows sorted by (decoder, snr).

    Writes the CSV atomically to ``config.output_path`` when set. Per-trial
    seeding makes the output independent of ``chunk_size``.
    """
    weighted = _middle_mass_flag(middle_mass)
    total_bits = config.trials * config.bits_per_trial
    rows = []
    for snr_db in config.snr_db_list:
        U, Y, params = _generate_block(
            snr_db, config.trials, config.bits_per_trial, config.master_seed
        )
        for name in config.decoders:
            U_hat = _decode_block(name, Y, params.sigma, config.k0, chunk_size, weighted)
            report = bit_error_rate_batch(U, U_hat)
            rows.append(
                ResultRow(
                    snr_db=snr_db,
                    sigma=params.sigma,
                    decoder=name,
                    ber=report.ber,
                    std_err=_binomial_stderr(report.ber, total_bits),
                    trials=config.trials,
                    bits_per_trial=config.bits_per_trial,
                    master_seed=config.master_seed,
                )
            )
    rows.sort(key=lambda r: (r.decoder, r.snr_db))
    if config.output_path is not None:
        write_rows_csv(rows, config.output_path)
    return rows


# ---------------------------------------------------------------------------
# single-sequence error rate (conditional BER)
# ---------------------------------------------------------------------------


def run_cber(
    decoder: str,
    sigma: float,
    K: int,
    input_seed: int,
    noise_seed: int,
    middle_mass: str = "weighted",
) -> ErrorReport:
    """Empirical error rate of one fixed input realization of length K.

    This is the per-sequence (conditional) error rate; for long K it
    converges to the same limit as the input-averaged BER for almost every
    input word.
    """
    if decoder not in REDUCED_DECODERS:
        raise ValueError(f"decoder must be one of {REDUCED_DECODERS}, got {decoder!r}")
    if K < 10**5:
        warnings.warn(
            f"K={K} is below the recommended 1e5; the per-sequence rate will be noisy",
            stacklevel=2,
        )
    u, _, trace = simulate_trace(K, ChannelParams.from_sigma(sigma), input_seed, noise_seed)
    if decoder == "one_state":
        u_hat = _fast.one_state_batch(trace.samples[None, :])[0]
    else:
        u_hat = _fast.two_states_batch(
            trace.samples[None, :], sigma, _middle_mass_flag(middle_mass)
        )[0]
    return bit_error_rate(u, u_hat)


# ---------------------------------------------------------------------------
# analytic vs simulated comparison
# ---------------------------------------------------------------------------


def compare_analytic(
    sigma_list,
    mc_bits: int,
    master_seed: int = 0,
    n_bins: int = 128,
    d_max: int = 30,
    tol: float = 1e-10,
    seq_len: int = 10**6,
    middle_mass: str = "weighted",
) -> list[ResultRow]:
    """Pair the analytic asymptotic BER of both reduced decoders with a Monte
    Carlo estimate over at least ``mc_bits`` bits per decoder and sigma.

    The Monte Carlo side splits the budget into sequences of about
    ``seq_len`` bits so the per-sequence start-up transient is negligible
    while the sequential decoders still run in long compiled bursts.
    """
    if mc_bits < 1:
        raise ValueError("mc_bits must be positive")
    weighted = _middle_mass_flag(middle_mass)
    n_seq = max(1, math.ceil(mc_bits / seq_len))
    L = math.ceil(mc_bits / n_seq)
    total = n_seq * L

    rows = []
    for sigma in sigma_list:
        sigma = float(sigma)
        chain = one_state_invariant(one_state_transitions(sigma, d_max))
        analytic = {
            "one_state": one_state_asymptotic_ber(chain),
            "two_states": two_state_asymptotic_ber(
                invariant_by_iteration(discretize_kernel(sigma, n_bins, d_max), tol=tol)
            ),
        }
        params = ChannelParams.from_sigma(sigma)
        errors = {name: 0 for name in REDUCED_DECODERS}
        for s in range(n_seq):
            u, _, trace = simulate_trace(
                L, params, trial_seed(master_seed, sigma, s, _INPUT),
                trial_seed(master_seed, sigma, s, _NOISE),
            )
            y = trace.samples[None, :]
            errors["one_state"] += int((_fast.one_state_batch(y)[0] != u).sum())
            errors["two_states"] += int((_fast.two_states_batch(y, sigma, weighted)[0] != u).sum())
        for name in REDUCED_DECODERS:
            ber = errors[name] / total
            rows.append(
                ResultRow(
                    snr_db=sigma_to_snr(sigma),
                    sigma=sigma,
                    decoder=name,
                    ber=ber,
                    std_err=_binomial_stderr(ber, total),
                    trials=n_seq,
                    bits_per_trial=L,
                    master_seed=master_seed,
                    analytic_ber=analytic[name],
                )
            )
    return rows


# ---------------------------------------------------------------------------
# oracle cross-check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleMismatch:
    sigma: float
    instance: int
    decoder: str
    k0: int | None
    bit_index: int
    expected: int
    got: int
    input_seed: int
    noise_seed: int
    trace_dump: str


@dataclass(frozen=True)
class OracleCheckReport:
    passed: bool
    instances: int
    comparisons: int
    mismatch: OracleMismatch | None = None

    def summary(self) -> str:
        if self.passed:
            return f"PASS: {self.comparisons} decoder/oracle comparisons, no mismatch"
        m = self.mismatch
        return (
            f"FAIL: {m.decoder} (k0={m.k0}) disagrees with the oracle at bit {m.bit_index} "
            f"(expected {m.expected}, got {m.got}) on sigma={m.sigma}, instance {m.instance}, "
            f"seeds ({m.input_seed}, {m.noise_seed})\ntrace (k u x y):\n{m.trace_dump}"
        )


def oracle_check(
    K: int,
    instances: int,
    sigma_list,
    k0_list=None,
    master_seed: int = 0,
    bcjr_fn=None,
    cbcjr_fn=None,
) -> OracleCheckReport:
    """Compare the trellis decoders against brute-force enumeration.

    Runs seeded instances and stops at the first bitwise mismatch, reporting
    it with the full channel trace. ``bcjr_fn``/``cbcjr_fn`` exist so tests
    can inject a corrupted decoder and confirm the check actually bites.
    """
    if K > 12:
        raise ValueError(f"oracle_check is limited to K <= 12, got {K}")
    if instances < 1:
        raise ValueError("instances must be positive")
    if bcjr_fn is None:
        bcjr_fn = bcjr_decode
    if cbcjr_fn is None:
        cbcjr_fn = cbcjr_decode
    k0s = [0, 2, K] if k0_list is None else list(k0_list)
    for k0 in k0s:
        if not 0 <= k0 <= K:
            raise ValueError(f"k0 values must lie in [0, K]; got {k0}")

    words = _oracle_words(K)
    comparisons = 0
    checked = 0
    for sigma in sigma_list:
        sigma = float(sigma)
        params = ChannelParams.from_sigma(sigma)
        for i in range(instances):
            iseed = trial_seed(master_seed, sigma, i, _INPUT)
            nseed = trial_seed(master_seed, sigma, i, _NOISE)
            u, x, trace = simulate_trace(K, params, iseed, nseed)
            checked += 1
            cum = _oracle_cumulative_loglik(trace)

            cases = [("bcjr", None, bcjr_fn(trace))]
            for k0 in k0s:
                cases.append(("cbcjr", k0, cbcjr_fn(trace, k0)))
            for decoder, k0, got in cases:
                expected = _oracle_decisions(cum, words, k0)
                comparisons += 1
                if not np.array_equal(got, expected):
                    bit = int(np.nonzero(got != expected)[0][0])
                    return OracleCheckReport(
                        passed=False,
                        instances=checked,
                        comparisons=comparisons,
                        mismatch=OracleMismatch(
                            sigma=sigma,
                            instance=i,
                            decoder=decoder,
                            k0=k0,
                            bit_index=bit,
                            expected=int(expected[bit]),
                            got=int(got[bit]),
                            input_seed=iseed,
                            noise_seed=nseed,
                            trace_dump=format_trace_dump(u, x, trace),
                        ),
                    )
    return OracleCheckReport(passed=True, instances=checked, comparisons=comparisons)


# ---------------------------------------------------------------------------
# persistence and plot data
# ---------------------------------------------------------------------------


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_rows_csv(rows, path) -> None:
    """Write result rows as CSV (atomically: temp file then rename)."""
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            f"{_fmt(r.snr_db)},{_fmt(r.sigma)},{r.decoder},{_fmt(r.ber)},{_fmt(r.std_err)},"
            f"{r.trials},{r.bits_per_trial},{r.master_seed},{_fmt(r.analytic_ber)}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def read_rows_csv(path) -> list[ResultRow]:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            (snr, sigma, decoder, ber, stderr, trials, bits, seed, analytic) = line.split(",")
            rows.append(
                ResultRow(
                    snr_db=float(snr),
                    sigma=float(sigma),
                    decoder=decoder,
                    ber=float(ber),
                    std_err=float(stderr),
                    trials=int(trials),
                    bits_per_trial=int(bits),
                    master_seed=int(seed),
                    analytic_ber=float(analytic) if analytic else None,
                )
            )
    return rows


def emit_plot_data(rows, path) -> None:
    """Write one whitespace-separated block per decoder: ``snr_db ber std_err``
    (plus ``analytic_ber`` as a fourth column on rows that carry it), blocks
    separated by blank lines."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to emit")
    blocks = []
    for name in sorted({r.decoder for r in rows}):
        decoder_rows = sorted((r for r in rows if r.decoder == name), key=lambda r: r.snr_db)
        lines = [f"# decoder: {name}"]
        for r in decoder_rows:
            line = f"{_fmt(r.snr_db)} {_fmt(r.ber)} {_fmt(r.std_err)}"
            if r.analytic_ber is not None:
                line += f" {_fmt(r.analytic_ber)}"
            lines.append(line)
        blocks.append("\n".join(lines))
    _atomic_write(path, "\n\n".join(blocks) + "\n")


def make_run_dir(root, master_seed: int) -> Path:
    """Create a fresh ``<root>/<timestamp>-<seed>`` directory, never reusing one."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    stamp = time.strftime("%Y%m%dT%H%M%SZ", time.gmtime())
    base = f"{stamp}-{master_seed}"
    candidate = root / base
    suffix = 0
    while True:
        try:
            candidate.mkdir()
            return candidate
        except FileExistsError:
            suffix += 1
            candidate = root / f"{base}-{suffix}"


# ---------------------------------------------------------------------------
# SNR-gap estimation
# ---------------------------------------------------------------------------


def snr_at_ber(rows, level: float) -> float | None:
    """SNR at which a decoder's curve crosses ``level``, by piecewise-linear
    inverse interpolation of log10(BER) against SNR. None when not bracketed."""
    if level <= 0:
        raise ValueError("level must be positive")
    pts = sorted(((r.snr_db, r.ber) for r in rows if r.ber > 0), key=lambda p: p[0])
    if len(pts) < 2:
        return None
    ls = math.log10(level)
    for (s0, b0), (s1, b1) in zip(pts, pts[1:]):
        l0, l1 = math.log10(b0), math.log10(b1)
        if (l0 - ls) * (l1 - ls) <= 0:
            if l0 == l1:
                return s0
            return s0 + (ls - l0) / (l1 - l0) * (s1 - s0)
    return None


def gap_db(rows_a, rows_b, level: float) -> float | None:
    """Horizontal SNR gap (b minus a) between two decoder curves at one BER level."""
    s_a = snr_at_ber(rows_a, level)
    s_b = snr_at_ber(rows_b, level)
    if s_a is None or s_b is None:
        return None
    return s_b - s_a
