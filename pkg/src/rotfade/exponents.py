"""Closed-form diversity reliability exponents and block-diversity bounds.

All rate-dependent floors and ceilings are evaluated on exact rationals, so
staircase jumps land exactly where they should.  Conventions: B fading blocks,
K = B/N rotations of dimension N, Nakagami shape m, rate R bits per channel
use over a 2**M point constellation, and lam = lim L / log(SNR) the
codeword-length growth ratio of the random-coding ensemble.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

LOG2 = math.log(2.0)


def _as_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, float):
        return Fraction(value)  # exact binary expansion
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


@dataclass(frozen=True)
class ExponentQuery:
    blocks: int
    rot_dim: int
    m: float
    rate_ratio: Fraction  # R / M
    bits_per_symbol: int | None = None
    lam: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "rate_ratio", _as_fraction(self.rate_ratio))
        if self.blocks % self.rot_dim != 0:
            raise ValueError(f"rotation dimension {self.rot_dim} must divide B={self.blocks}")
        if not self.m > 0:
            raise ValueError("Nakagami shape m must be positive")
        if not 0 <= self.rate_ratio <= 1:
            raise ValueError(f"rate ratio R/M must lie in [0, 1], got {self.rate_ratio}")
        if self.lam is not None and self.lam < 0:
            raise ValueError("length-growth ratio lam must be nonnegative")

    @classmethod
    def from_rate(cls, blocks, rot_dim, m, rate, bits_per_symbol, lam=None):
        ratio = _as_fraction(rate) / _as_fraction(bits_per_symbol)
        return cls(blocks, rot_dim, m, ratio, int(bits_per_symbol), lam)

    @property
    def groups(self):
        return self.blocks // self.rot_dim

    @property
    def load(self):
        """(B/N) (1 - R/M), the quantity whose integrality decides boundaries."""
        return Fraction(self.blocks, self.rot_dim) * (1 - self.rate_ratio)


def optimal_exponent(m, blocks):
    """Largest achievable exponent under the average power constraint: m * B."""
    return m * blocks


def singleton_block_diversity(blocks, rot_dim, rate, bits_per_symbol):
    """Blockwise Singleton bound on block diversity: N (1 + floor((B/N)(1 - R/M)))."""
    q = ExponentQuery.from_rate(blocks, rot_dim, 1.0, rate, bits_per_symbol)
    return rot_dim * (1 + math.floor(q.load))


def upper_bound(query):
    """Exponent upper bound for K rotations of dimension N: m N (1 + floor(load))."""
    return query.m * query.rot_dim * (1 + math.floor(query.load))


@dataclass(frozen=True)
class TheoremExponent:
    """Optimal exponent where determined; upper/lower pair at boundaries.

    Off boundary (load not an integer) the two limits coincide and ``value``
    holds the exponent.  On boundary points the optimum is undetermined
    between ``lower_limit`` (random-coding bound as lam -> inf) and ``upper``,
    and ``value`` is None.
    """

    boundary: bool
    upper: float
    lower_limit: float
    value: float | None


def theorem_exponent(query):
    load = query.load
    ub = upper_bound(query)
    lb = query.m * query.rot_dim * math.ceil(load)
    boundary = load.denominator == 1
    return TheoremExponent(boundary, ub, lb, None if boundary else ub)


def random_coding_lower_bound(query):
    """Random-coding exponent lower bound at finite length-growth ratio lam.

    Two regimes: below the critical growth (lam N M log2 < m) the exponent is
    pairwise-error limited, lam B M log2 (1 - R/M); above it, the minimum of
    the fully-faded-group exponent m N ceil(load) and the mixed term
    m N floor(load) + lam M log2 (B (1 - R/M) - N floor(load)).
    """
    if query.lam is None:
        raise ValueError("random_coding_lower_bound needs a query with lam set")
    if query.bits_per_symbol is None:
        raise ValueError("random_coding_lower_bound needs bits_per_symbol set")
    m, n, b = query.m, query.rot_dim, query.blocks
    mm = query.bits_per_symbol
    lam = float(query.lam)
    one_minus = float(1 - query.rate_ratio)
    if lam * n * mm * LOG2 < m:
        return lam * b * mm * LOG2 * one_minus
    load_floor = math.floor(query.load)
    full = m * n * math.ceil(query.load)
    mixed = m * n * load_floor + lam * mm * LOG2 * (b * one_minus - n * load_floor)
    return min(full, mixed)


def block_diversity(codebook, cap=2**16):
    """Exhaustive block diversity: min over codeword pairs of differing rows.

    codebook: array (n_codewords, B, L); entries compared exactly.
    """
    cw = np.asarray(codebook)
    if cw.ndim != 3:
        raise ValueError("codebook must have shape (n_codewords, B, L)")
    n = cw.shape[0]
    if n > cap:
        raise ValueError(f"codebook size {n} exceeds the exhaustive-scan cap {cap}")
    if n < 2:
        raise ValueError("block diversity needs at least two codewords")
    best = cw.shape[1]
    for i in range(n - 1):
        differs = np.any(cw[i + 1 :] != cw[i][None], axis=2)  # (n-i-1, B)
        best = min(best, int(differs.sum(axis=1).min()))
        if best == 0:
            raise ValueError("codebook contains duplicate codewords")
    return best
