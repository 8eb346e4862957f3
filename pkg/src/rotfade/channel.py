"""Nakagami-m block-fading channel: gain sampling and received-signal model.

Per-block power gains gamma_b = |h_b|^2 are Gamma(shape m, rate m), i.e. the
square of a Nakagami-m amplitude, so E[gamma] = 1 and Var[gamma] = 1/m.
Receiver-side phase correction is assumed, so amplitudes are generated real
and nonnegative (h = sqrt(gamma)).
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FadingSpec:
    blocks: int
    m: float

    def __post_init__(self):
        if self.blocks < 1:
            raise ValueError("need at least one fading block")
        if not self.m > 0:
            raise ValueError("Nakagami shape m must be positive")


@dataclass(frozen=True)
class ChannelRealization:
    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim != 1 or np.any(g < 0):
            raise ValueError("gamma must be a 1-D vector of nonnegative power gains")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def amplitudes(self):
        return np.sqrt(self.gamma)


@dataclass(frozen=True)
class NormalizedFading:
    alpha: np.ndarray
    snr: float


def rician_to_m(k_factor):
    """Nakagami shape matching a Rician K-factor: m = (K+1)^2 / (2K+1)."""
    if k_factor < 0:
        raise ValueError("Rician K-factor must be nonnegative")
    return (k_factor + 1.0) ** 2 / (2.0 * k_factor + 1.0)


def sample_gamma(spec, trials, rng):
    """(trials, blocks) matrix of i.i.d. Gamma(m, rate m) power gains."""
    return rng.gamma(shape=spec.m, scale=1.0 / spec.m, size=(trials, spec.blocks))


def sample_fading(spec, rng):
    """One channel realization drawn from the Nakagami-m power-gain law."""
    return ChannelRealization(sample_gamma(spec, 1, rng)[0])


def apply_channel(x, h, snr, rng, noise=None):
    """Y = sqrt(snr) * diag(h) X + Z with Z i.i.d. CN(0, 1) per entry.

    x: (B, L) complex codeword slice, h: (B,) real amplitudes.  A pre-drawn
    noise array can be passed for deterministic tests.
    """
    x = np.asarray(x)
    h = np.asarray(h, dtype=float)
    if x.ndim != 2 or h.shape != (x.shape[0],):
        raise ValueError(f"inconsistent shapes: x {x.shape}, h {h.shape}")
    if noise is None:
        noise = complex_noise(rng, x.shape)
    elif noise.shape != x.shape:
        raise ValueError(f"noise shape {noise.shape} does not match x {x.shape}")
    return np.sqrt(snr) * h[:, None] * x + noise


def complex_noise(rng, shape):
    """Circularly-symmetric complex Gaussian, unit variance per complex entry."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def to_alpha(realization, snr):
    """Normalized fading exponents alpha_b = -log(gamma_b) / log(snr).

    A zero gain maps to +inf (cannot occur from the sampler; only reachable
    with user-supplied realizations).
    """
    if not snr > 1:
        raise ValueError("normalized fading needs snr > 1")
    gamma = realization.gamma
    alpha = np.full_like(gamma, np.inf)
    pos = gamma > 0
    alpha[pos] = -np.log(gamma[pos]) / np.log(snr)
    return NormalizedFading(alpha, float(snr))
