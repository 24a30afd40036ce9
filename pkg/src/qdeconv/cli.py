"""Command-line front end.

Subcommands: ``simulate``, ``cber``, ``analyze one-state``,
``analyze two-states``, ``compare``, ``oracle-check``, ``plot-data``.

Options may come from a ``key = value`` config file (``--config``); explicit
flags always win. Exit codes: 0 success, 1 usage error, 2 numerical or
convergence failure, 3 oracle-check mismatch.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .analysis import (
    ConvergenceError,
    DiscretizationError,
    TruncationError,
    discretize_kernel,
    export_one_state_invariant,
    export_two_state_invariant,
    invariant_by_iteration,
    one_state_asymptotic_ber,
    one_state_invariant,
    one_state_transitions,
    two_state_asymptotic_ber,
)
from .decoders import DECODER_NAMES
from .harness import (
    DEFAULT_SNR_GRID,
    SweepConfig,
    compare_analytic,
    emit_plot_data,
    make_run_dir,
    oracle_check,
    read_rows_csv,
    run_cber,
    run_sweep,
    trial_seed,
    write_rows_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_CHECK_FAILED = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; the CLI contract wants 1
    def error(self, message):
        raise _UsageError(message)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


def _names(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def load_config_file(path) -> dict[str, str]:
    """Parse a line-oriented ``key = value`` config file."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise _UsageError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip().lower().replace("-", "_")] = value.strip()
    return values


def _effective(args, cfg: dict[str, str], key: str, convert, default):
    """Flag value if given, else config-file value, else the built-in default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in cfg:
        return convert(cfg[key])
    return default


def _build_parser() -> _Parser:
    parser = _Parser(prog="qdeconv", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file; flags override it")
        p.add_argument("--seed", type=int, help="master seed (default 0)")
        p.add_argument("--out", help="output path")

    p = sub.add_parser("simulate", help="Monte Carlo BER sweep over SNR")
    common(p)
    p.add_argument("--snr", type=_floats, help="comma-separated SNR list in dB")
    p.add_argument("--trials", type=int, help="transmissions per SNR point (default 5000)")
    p.add_argument("--bits", type=int, help="bits per transmission (default 100)")
    p.add_argument("--decoders", type=_names, help=f"subset of {','.join(DECODER_NAMES)}")
    p.add_argument("--k0", type=int, help="decision delay for cbcjr (default 0)")
    p.add_argument("--runs-root", default="runs", help="directory for run folders")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("cber", help="per-sequence error rate of one long realization")
    common(p)
    p.add_argument("--decoders", type=_names, help="one of one_state,two_states")
    p.add_argument("--sigma", type=_floats, help="noise standard deviation")
    p.add_argument("--bits", type=int, help="sequence length K (default 10^7)")
    p.add_argument("--input-seed", type=int, help="override the derived input seed")
    p.add_argument("--noise-seed", type=int, help="override the derived noise seed")
    p.set_defaults(func=_cmd_cber)

    p = sub.add_parser("analyze", help="analytic asymptotic BER")
    asub = p.add_subparsers(dest="analysis", required=True)

    p1 = asub.add_parser("one-state", help="closed-form invariant vector")
    common(p1)
    p1.add_argument("--sigma", type=_floats, help="noise standard deviation")
    p1.add_argument("--d-max", dest="d_max", type=int, help="offset truncation (default 30)")
    p1.set_defaults(func=_cmd_analyze_one)

    p2 = asub.add_parser("two-states", help="discretized kernel + power iteration")
    common(p2)
    p2.add_argument("--sigma", type=_floats, help="noise standard deviation")
    p2.add_argument("--d-max", dest="d_max", type=int, help="offset truncation (default 30)")
    p2.add_argument("--bins", type=int, help="weight bins (default 128)")
    p2.add_argument("--tol", type=float, help="power-iteration L1 tolerance (default 1e-10)")
    p2.set_defaults(func=_cmd_analyze_two)

    p = sub.add_parser("compare", help="analytic vs Monte Carlo for the reduced decoders")
    common(p)
    p.add_argument("--sigma", type=_floats, help="comma-separated sigma list")
    p.add_argument("--mc-bits", dest="mc_bits", type=int, help="MC bits per point (default 10^7)")
    p.add_argument("--d-max", dest="d_max", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("oracle-check", help="trellis decoders vs brute-force oracles")
    common(p)
    p.add_argument("--bits", type=int, help="message length K <= 12 (default 10)")
    p.add_argument("--trials", type=int, help="instances per sigma (default 200)")
    p.add_argument("--sigma", type=_floats, help="sigma list (default 0.5,1,2)")
    p.add_argument("--k0", type=_names, help="comma-separated delays; 'K' means full (default 0,2,K)")
    p.set_defaults(func=_cmd_oracle_check)

    p = sub.add_parser("plot-data", help="convert a results CSV into plot blocks")
    common(p)
    p.add_argument("--in", dest="input_path", help="results CSV (as written by simulate)")
    p.set_defaults(func=_cmd_plot_data)

    return parser


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _print_rows(rows) -> None:
    for r in rows:
        line = (
            f"{r.decoder:>10s}  snr={r.snr_db:+7.2f} dB  sigma={r.sigma:<10.6g} "
            f"ber={r.ber:.6g}  std_err={r.std_err:.3g}"
        )
        if r.analytic_ber is not None:
            line += f"  analytic={r.analytic_ber:.6g}"
        print(line)


def _cmd_simulate(args, cfg) -> int:
    config = SweepConfig(
        snr_db_list=_effective(args, cfg, "snr", _floats, DEFAULT_SNR_GRID),
        trials=_effective(args, cfg, "trials", int, 5000),
        bits_per_trial=_effective(args, cfg, "bits", int, 100),
        decoders=_effective(args, cfg, "decoders", _names, DECODER_NAMES),
        k0=_effective(args, cfg, "k0", int, 0),
        master_seed=_effective(args, cfg, "seed", int, 0),
    )
    out = _effective(args, cfg, "out", str, None)
    if out is not None:
        rows = run_sweep(replace(config, output_path=out))
        _print_rows(rows)
        print(f"wrote {out}")
        return EXIT_OK
    run_dir = make_run_dir(args.runs_root, config.master_seed)
    snapshot = [
        f"snr = {','.join(repr(s) for s in config.snr_db_list)}",
        f"trials = {config.trials}",
        f"bits = {config.bits_per_trial}",
        f"decoders = {','.join(config.decoders)}",
        f"k0 = {config.k0}",
        f"seed = {config.master_seed}",
    ]
    (run_dir / "config.txt").write_text("\n".join(snapshot) + "\n")
    rows = run_sweep(replace(config, output_path=run_dir / "results.csv"))
    emit_plot_data(rows, run_dir / "plot.dat")
    _print_rows(rows)
    print(f"wrote {run_dir}/{{config.txt,results.csv,plot.dat}}")
    return EXIT_OK


def _single_sigma(args, cfg) -> float:
    sigmas = _effective(args, cfg, "sigma", _floats, None)
    if not sigmas:
        raise _UsageError("--sigma is required")
    if len(sigmas) != 1:
        raise _UsageError("exactly one sigma expected here")
    return sigmas[0]


def _cmd_cber(args, cfg) -> int:
    decoders = _effective(args, cfg, "decoders", _names, ("one_state",))
    if len(decoders) != 1:
        raise _UsageError("cber decodes with exactly one reduced-state decoder")
    sigma = _single_sigma(args, cfg)
    K = _effective(args, cfg, "bits", int, 10**7)
    seed = _effective(args, cfg, "seed", int, 0)
    input_seed = _effective(args, cfg, "input_seed", int, trial_seed(seed, sigma, 0, 0))
    noise_seed = _effective(args, cfg, "noise_seed", int, trial_seed(seed, sigma, 0, 1))
    report = run_cber(decoders[0], sigma, K, input_seed, noise_seed)
    std_err = (report.ber * (1 - report.ber) / report.bits_total) ** 0.5
    print(
        f"{decoders[0]} sigma={sigma:g} K={K} cber={report.ber:.17g} "
        f"std_err={std_err:.3g} bit_errors={report.bit_errors} "
        f"input_seed={input_seed} noise_seed={noise_seed}"
    )
    return EXIT_OK


def _cmd_analyze_one(args, cfg) -> int:
    sigma = _single_sigma(args, cfg)
    d_max = _effective(args, cfg, "d_max", int, 30)
    chain = one_state_invariant(one_state_transitions(sigma, d_max))
    ber = one_state_asymptotic_ber(chain)
    print(f"one_state sigma={sigma:g} d_max={d_max} asymptotic_ber={ber:.17g}")
    out = _effective(args, cfg, "out", str, None)
    if out is not None:
        export_one_state_invariant(chain, out)
        print(f"wrote {out}")
    return EXIT_OK


def _cmd_analyze_two(args, cfg) -> int:
    sigma = _single_sigma(args, cfg)
    d_max = _effective(args, cfg, "d_max", int, 30)
    n_bins = _effective(args, cfg, "bins", int, 128)
    tol = _effective(args, cfg, "tol", float, 1e-10)
    grid = invariant_by_iteration(discretize_kernel(sigma, n_bins, d_max), tol=tol)
    ber = two_state_asymptotic_ber(grid)
    print(
        f"two_states sigma={sigma:g} d_max={d_max} bins={n_bins} tol={tol:g} "
        f"asymptotic_ber={ber:.17g}"
    )
    out = _effective(args, cfg, "out", str, None)
    if out is not None:
        export_two_state_invariant(grid, out)
        print(f"wrote {out}")
    return EXIT_OK


def _cmd_compare(args, cfg) -> int:
    sigmas = _effective(args, cfg, "sigma", _floats, (0.5, 1.0, 2.0))
    mc_bits = _effective(args, cfg, "mc_bits", int, 10**7)
    rows = compare_analytic(
        sigmas,
        mc_bits,
        master_seed=_effective(args, cfg, "seed", int, 0),
        n_bins=_effective(args, cfg, "bins", int, 128),
        d_max=_effective(args, cfg, "d_max", int, 30),
        tol=_effective(args, cfg, "tol", float, 1e-10),
    )
    _print_rows(rows)
    out = _effective(args, cfg, "out", str, None)
    if out is not None:
        write_rows_csv(rows, out)
        print(f"wrote {out}")
    return EXIT_OK


def _cmd_oracle_check(args, cfg) -> int:
    K = _effective(args, cfg, "bits", int, 10)
    instances = _effective(args, cfg, "trials", int, 200)
    sigmas = _effective(args, cfg, "sigma", _floats, (0.5, 1.0, 2.0))
    raw_k0 = _effective(args, cfg, "k0", _names, ("0", "2", "K"))
    k0_list = [K if tok.upper() == "K" else int(tok) for tok in raw_k0]
    report = oracle_check(
        K,
        instances,
        sigmas,
        k0_list=k0_list,
        master_seed=_effective(args, cfg, "seed", int, 0),
    )
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _cmd_plot_data(args, cfg) -> int:
    input_path = _effective(args, cfg, "input_path", str, None)
    out = _effective(args, cfg, "out", str, None)
    if input_path is None or out is None:
        raise _UsageError("plot-data requires --in and --out")
    emit_plot_data(read_rows_csv(input_path), out)
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config_file(args.config) if getattr(args, "config", None) else {}
        return args.func(args, cfg)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, TruncationError, DiscretizationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
