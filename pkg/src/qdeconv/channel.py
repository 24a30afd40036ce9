"""Seeded Bernoulli sources, unit-integrator encoding, and AWGN observation traces.

The forward model: a binary input word ``u`` drives a unit integrator with
sampling time 1, so the state is the running sum ``x_k = u_0 + ... + u_{k-1}``,
and the receiver observes ``y_k = x_k + n_k`` with ``n_k ~ N(0, sigma^2)``.

All randomness flows through numpy ``SeedSequence``: the input-bit stream and
the noise stream are derived from their seeds under distinct substream tags,
so the same integer seed never produces correlated bits and noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelParams",
    "ObservationTrace",
    "add_noise",
    "encode",
    "format_trace_dump",
    "generate_input",
    "sigma_to_snr",
    "simulate_trace",
    "snr_to_sigma",
]

_SEED_MASK = (1 << 64) - 1

# Substream tags keeping input bits and observation noise on independent
# streams even when the caller passes the same integer seed to both.
_INPUT_STREAM = 1
_NOISE_STREAM = 2


def snr_to_sigma(snr_db: float) -> float:
    """Noise standard deviation for a given SNR in dB (SNR = 1/sigma^2)."""
    return 10.0 ** (-snr_db / 20.0)


def sigma_to_snr(sigma: float) -> float:
    """SNR in dB for a given noise standard deviation."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return -20.0 * math.log10(sigma)


@dataclass(frozen=True)
class ChannelParams:
    """Noise level of the observation channel, stored both as sigma and in dB.

    The two representations must agree: ``sigma == 10**(-snr_db/20)`` to
    machine precision. Use :meth:`from_sigma` or :meth:`from_snr_db` unless
    you already hold a consistent pair.
    """

    sigma: float
    snr_db: float

    def __post_init__(self):
        if not (self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        expected = snr_to_sigma(self.snr_db)
        if not math.isclose(self.sigma, expected, rel_tol=1e-12):
            raise ValueError(
                f"inconsistent pair: sigma={self.sigma!r} but snr_db={self.snr_db!r} "
                f"implies sigma={expected!r}"
            )

    @classmethod
    def from_sigma(cls, sigma: float) -> "ChannelParams":
        return cls(sigma=float(sigma), snr_db=sigma_to_snr(float(sigma)))

    @classmethod
    def from_snr_db(cls, snr_db: float) -> "ChannelParams":
        return cls(sigma=snr_to_sigma(float(snr_db)), snr_db=float(snr_db))


@dataclass(frozen=True)
class ObservationTrace:
    """Noisy sampled integrator output ``y_1..y_K`` with its channel parameters.

    ``seed`` records the noise realization's seed for provenance; traces built
    by hand (tests, noiseless limits) may pass any value.
    """

    samples: np.ndarray
    params: ChannelParams
    seed: int = 0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def sigma(self) -> float:
        return self.params.sigma


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed & _SEED_MASK, stream))))


def generate_input(K: int, seed: int) -> np.ndarray:
    """Draw K fair input bits from the seeded input stream.

    Identical (K, seed) pairs yield identical words; the stream is independent
    of any noise stream built from the same integer.
    """
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    return _rng(seed, _INPUT_STREAM).integers(0, 2, size=K, dtype=np.int8)


def encode(u: np.ndarray) -> np.ndarray:
    """Run the unit integrator over the input word: x_k = u_0 + ... + u_{k-1}."""
    u = np.asarray(u)
    if u.ndim != 1 or u.size == 0:
        raise ValueError("input word must be a nonempty 1-d array")
    if not np.isin(u, (0, 1)).all():
        raise ValueError("input word must contain only 0s and 1s")
    return np.cumsum(u, dtype=np.int64)


def add_noise(x: np.ndarray, params: ChannelParams, seed: int) -> ObservationTrace:
    """Corrupt a state trajectory with i.i.d. Gaussian noise from the seeded stream."""
    x = np.asarray(x)
    if params.sigma <= 0:
        raise ValueError("sigma must be positive")
    noise = _rng(seed, _NOISE_STREAM).standard_normal(x.shape[0])
    return ObservationTrace(x + params.sigma * noise, params, seed)


def simulate_trace(
    K: int, params: ChannelParams, input_seed: int, noise_seed: int
) -> tuple[np.ndarray, np.ndarray, ObservationTrace]:
    """Generate one full channel realization: (bits, states, observation trace)."""
    u = generate_input(K, input_seed)
    x = encode(u)
    return u, x, add_noise(x, params, noise_seed)


def format_trace_dump(u: np.ndarray, x: np.ndarray, trace: ObservationTrace) -> str:
    """Debug dump: one ``k u_k x_k y_k`` line per step, y at 17 significant digits."""
    lines = []
    for k in range(len(trace)):
        lines.append(f"{k + 1} {int(u[k])} {int(x[k])} {trace.samples[k]:.17g}")
    return "\n".join(lines)
