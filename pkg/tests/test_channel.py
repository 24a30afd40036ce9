"""Channel model: seeded inputs, integrator encoding, AWGN observations."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdeconv import (
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


class TestSnrConversion:
    def test_zero_db_is_unit_sigma(self):
        assert snr_to_sigma(0.0) == 1.0

    def test_twenty_db(self):
        assert snr_to_sigma(20.0) == pytest.approx(0.1, rel=1e-15)

    def test_sigma_two(self):
        # 20*log10(2) = 6.0206 dB, so -6.0206 dB gives sigma = 2
        assert snr_to_sigma(-6.0206) == pytest.approx(2.0, abs=1e-4)

    @given(st.floats(min_value=-60.0, max_value=60.0))
    @settings(derandomize=True)
    def test_round_trip(self, snr_db):
        assert sigma_to_snr(snr_to_sigma(snr_db)) == pytest.approx(snr_db, abs=1e-12)


class TestChannelParams:
    def test_from_sigma_consistency(self):
        p = ChannelParams.from_sigma(0.7)
        assert p.sigma == pytest.approx(snr_to_sigma(p.snr_db), rel=1e-12)

    def test_from_snr_db(self):
        p = ChannelParams.from_snr_db(3.5)
        assert p.snr_db == 3.5
        assert p.sigma == pytest.approx(10 ** (-3.5 / 20), rel=1e-15)

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ValueError):
            ChannelParams.from_sigma(0.0)
        with pytest.raises(ValueError):
            ChannelParams.from_sigma(-1.0)

    def test_rejects_inconsistent_pair(self):
        with pytest.raises(ValueError, match="inconsistent"):
            ChannelParams(sigma=1.0, snr_db=3.0)


class TestGenerateInput:
    def test_deterministic(self):
        a = generate_input(3, seed=42)
        b = generate_input(3, seed=42)
        np.testing.assert_array_equal(a, b)

    def test_single_bit_domain(self):
        bit = generate_input(1, seed=7)
        assert bit.shape == (1,)
        assert bit[0] in (0, 1)

    def test_rejects_zero_length(self):
        with pytest.raises(ValueError):
            generate_input(0, seed=1)

    def test_fair_coin_mean(self):
        # law of large numbers: 4-sigma band around 1/2 at a million draws
        bits = generate_input(10**6, seed=123)
        assert abs(bits.mean() - 0.5) < 0.002

    def test_different_seeds_differ(self):
        assert not np.array_equal(generate_input(64, 1), generate_input(64, 2))


class TestEncode:
    def test_hand_example(self):
        np.testing.assert_array_equal(encode([1, 0, 1]), [1, 1, 2])

    def test_all_zeros(self):
        np.testing.assert_array_equal(encode(np.zeros(5, dtype=int)), np.zeros(5))

    def test_all_ones_ramp(self):
        np.testing.assert_array_equal(encode(np.ones(6, dtype=int)), np.arange(1, 7))

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            encode([0, 2, 1])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            encode([])

    @given(st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=200))
    @settings(derandomize=True)
    def test_monotone_unit_steps(self, bits):
        x = encode(bits)
        steps = np.diff(np.concatenate([[0], x]))
        assert set(steps.tolist()) <= {0, 1}
        assert x[-1] == sum(bits)


class TestAddNoise:
    def test_deterministic(self):
        x = encode([1, 0, 1, 1])
        p = ChannelParams.from_sigma(0.8)
        t1 = add_noise(x, p, seed=5)
        t2 = add_noise(x, p, seed=5)
        np.testing.assert_array_equal(t1.samples, t2.samples)

    def test_vanishing_noise_hugs_trajectory(self):
        x = encode([1, 0, 1])
        t = add_noise(x, ChannelParams.from_sigma(1e-6), seed=11)
        assert np.abs(t.samples - x).max() < 1e-4

    def test_sample_variance(self):
        x = np.zeros(10**6, dtype=np.int64)
        sigma = 0.7
        t = add_noise(x, ChannelParams.from_sigma(sigma), seed=3)
        var = np.var(t.samples)
        assert abs(var - sigma**2) / sigma**2 < 0.05

    def test_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            ChannelParams(sigma=-0.1, snr_db=0.0)

    def test_trace_is_immutable(self):
        t = add_noise(encode([1, 1]), ChannelParams.from_sigma(1.0), seed=9)
        with pytest.raises(ValueError):
            t.samples[0] = 0.0


class TestSeedDomains:
    def test_same_integer_gives_independent_streams(self):
        # bits and noise drawn from the same integer seed must not correlate
        K = 10**5
        bits = generate_input(K, seed=77)
        trace = add_noise(np.zeros(K, dtype=np.int64), ChannelParams.from_sigma(1.0), seed=77)
        centred = bits.astype(float) - bits.mean()
        corr = float(np.dot(centred, trace.samples)) / K
        assert abs(corr) < 0.01

    def test_noise_seed_does_not_touch_bits(self):
        u1, _, _ = simulate_trace(50, ChannelParams.from_sigma(1.0), input_seed=4, noise_seed=1)
        u2, _, _ = simulate_trace(50, ChannelParams.from_sigma(1.0), input_seed=4, noise_seed=2)
        np.testing.assert_array_equal(u1, u2)

    def test_input_seed_does_not_touch_noise(self):
        _, x1, t1 = simulate_trace(50, ChannelParams.from_sigma(1.0), input_seed=4, noise_seed=9)
        _, x2, t2 = simulate_trace(50, ChannelParams.from_sigma(1.0), input_seed=5, noise_seed=9)
        np.testing.assert_allclose(t1.samples - x1, t2.samples - x2, atol=1e-12)


class TestTraceDump:
    def test_format_and_precision(self):
        u, x, trace = simulate_trace(4, ChannelParams.from_sigma(1.0), 1, 2)
        dump = format_trace_dump(u, x, trace)
        lines = dump.splitlines()
        assert len(lines) == 4
        for k, line in enumerate(lines):
            fields = line.split(" ")
            assert len(fields) == 4
            assert int(fields[0]) == k + 1
            assert int(fields[1]) == u[k]
            assert int(fields[2]) == x[k]
            # 17 significant digits round-trip the double exactly
            assert float(fields[3]) == trace.samples[k]


def test_observation_trace_len():
    t = ObservationTrace(np.array([0.1, 0.2]), ChannelParams.from_sigma(1.0))
    assert len(t) == 2
    assert t.sigma == 1.0
