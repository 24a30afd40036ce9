"""Trellis decoders against the brute-force bit-MAP oracles.

These are the strongest correctness checks in the suite: the oracle
enumerates every input word and marginalizes directly, sharing no code path
with the forward/backward recursions.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdeconv import (
    ChannelParams,
    ObservationTrace,
    bcjr_decode,
    cbcjr_decode,
    exhaustive_bitmap_oracle,
    simulate_trace,
)


def make_trace(samples, sigma=1.0):
    return ObservationTrace(np.asarray(samples, dtype=float), ChannelParams.from_sigma(sigma))


def random_trace(K, sigma, seed):
    _, _, trace = simulate_trace(K, ChannelParams.from_sigma(sigma), seed, seed + 1)
    return trace


class TestOracleBasics:
    def test_single_bit_threshold(self):
        assert exhaustive_bitmap_oracle(make_trace([0.3]))[0] == 0
        assert exhaustive_bitmap_oracle(make_trace([0.9]))[0] == 1

    def test_constructed_tie_decides_zero(self):
        # y = 0.5 makes the two single-bit hypotheses exactly equiprobable
        assert exhaustive_bitmap_oracle(make_trace([0.5]))[0] == 0

    def test_rejects_oracle_scale_violation(self):
        with pytest.raises(ValueError, match="limited"):
            exhaustive_bitmap_oracle(random_trace(21, 1.0, 1))

    def test_rejects_negative_k0(self):
        with pytest.raises(ValueError):
            exhaustive_bitmap_oracle(random_trace(4, 1.0, 1), k0=-1)

    def test_k0_beyond_length_equals_noncausal(self):
        trace = random_trace(6, 1.0, 9)
        np.testing.assert_array_equal(
            exhaustive_bitmap_oracle(trace, k0=100), exhaustive_bitmap_oracle(trace)
        )


class TestBcjrEqualsOracle:
    @pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
    def test_seeded_instances(self, sigma):
        for K in (2, 5, 10):
            for i in range(40):
                trace = random_trace(K, sigma, 1000 * K + i)
                np.testing.assert_array_equal(
                    bcjr_decode(trace),
                    exhaustive_bitmap_oracle(trace),
                    err_msg=f"K={K} sigma={sigma} instance {i}",
                )

    @given(
        samples=st.lists(
            st.floats(min_value=-4.0, max_value=10.0, allow_nan=False), min_size=1, max_size=6
        ),
        sigma=st.sampled_from([0.5, 1.0, 2.0]),
    )
    @settings(derandomize=True, max_examples=200)
    def test_arbitrary_observations(self, samples, sigma):
        trace = make_trace(samples, sigma)
        np.testing.assert_array_equal(bcjr_decode(trace), exhaustive_bitmap_oracle(trace))


class TestCbcjrEqualsCausalOracle:
    @pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("k0", [0, 1, 2, 8])
    def test_seeded_instances(self, sigma, k0):
        K = 8
        for i in range(40):
            trace = random_trace(K, sigma, 7000 + i)
            np.testing.assert_array_equal(
                cbcjr_decode(trace, k0),
                exhaustive_bitmap_oracle(trace, k0=k0),
                err_msg=f"k0={k0} sigma={sigma} instance {i}",
            )

    @given(
        samples=st.lists(
            st.floats(min_value=-4.0, max_value=10.0, allow_nan=False), min_size=2, max_size=6
        ),
        k0=st.integers(min_value=0, max_value=2),
    )
    @settings(derandomize=True, max_examples=200)
    def test_arbitrary_observations(self, samples, k0):
        trace = make_trace(samples, 1.0)
        np.testing.assert_array_equal(
            cbcjr_decode(trace, k0), exhaustive_bitmap_oracle(trace, k0=k0)
        )
