"""Deconvolution of a noisy sampled unit integrator driven by binary input.

The input word is recovered by trellis decoding of the counting states
x_k = u_0 + ... + u_{k-1} observed through AWGN. The package provides the
full forward/backward bit-MAP decoder, its bounded-delay causal variant, two
reduced-state online decoders (one and two surviving states), brute-force
oracles, a Monte Carlo harness, and exact Markov-chain computations of the
reduced decoders' asymptotic bit error rates.
"""

from .analysis import (
    ConvergenceError,
    DiscretizationError,
    OneStateChain,
    TruncationError,
    TwoStateKernelGrid,
    c_alpha,
    discretize_kernel,
    export_one_state_invariant,
    export_two_state_invariant,
    invariant_by_iteration,
    one_state_asymptotic_ber,
    one_state_invariant,
    one_state_transitions,
    qbar,
    two_state_asymptotic_ber,
    two_state_kernel_cdf,
    two_state_kernel_marginals,
)
from .channel import (
    ChannelParams,
    ObservationTrace,
    add_noise,
    encode,
    format_trace_dump,
    generate_input,
    sigma_to_snr,
    simulate_trace,
    snr_to_sigma,
)
from .decoders import (
    DECODER_NAMES,
    ErrorReport,
    TrellisPosteriors,
    bcjr_decode,
    bcjr_decode_batch,
    bit_error_rate,
    bit_error_rate_batch,
    cbcjr_decode,
    cbcjr_decode_batch,
    decisions_from_posteriors,
    exhaustive_bitmap_oracle,
    one_state_decode,
    reduced_state_step_dump,
    trellis_posteriors,
    two_states_decode,
)
from .harness import (
    CSV_HEADER,
    DEFAULT_SNR_GRID,
    OracleCheckReport,
    OracleMismatch,
    ResultRow,
    SweepConfig,
    compare_analytic,
    emit_plot_data,
    gap_db,
    make_run_dir,
    oracle_check,
    read_rows_csv,
    run_cber,
    run_sweep,
    snr_at_ber,
    trial_seed,
    write_rows_csv,
)

__version__ = "0.1.0"
