"""Instantaneous mutual information for Gaussian and rotated discrete inputs.

For a block of N channel uses with per-component amplitudes h and a rotation
M, the discrete-input mutual information in bits per block is

    I = M N - 2**(-MN) sum_s E_z[ log2(1 + sum_{s' != s} exp(a(s, s', z))) ]

with a = -||sqrt(snr) H M (s - s') + z||^2 + ||z||^2 and z a dummy CN(0,1)^N
vector.  Internally a is expanded as -||w||^2 - 2 Re<w, z>, which removes the
||z||^2 terms exactly and lets the z-dependence be computed by matrix products.

Three evaluation routes are provided: Gauss-Hermite quadrature over the 2N
real noise dimensions (deterministic, N <= 2), Monte Carlo with exhaustive
outer-symbol enumeration, and Monte Carlo with jointly sampled (s, z) pairs
for constellations too large to enumerate as outer symbols.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import logsumexp

from .channel import complex_noise
from .rotation import identity
from .seeding import derive_rng

LN2 = math.log(2.0)

# cost caps: quadrature work ~ Q^{2N} * 2^{2MN}; exhaustive MC enumerates 2^{MN}
QUAD_COST_CAP = 10**8
EXHAUSTIVE_OUTER_CAP = 4096


@dataclass(frozen=True)
class MiEstimate:
    value: float
    std_error: float
    method: str
    per_block: bool = False  # True: bits per block (max M*N); False: bits per channel use


def gaussian_mi(snr, gamma):
    """Gaussian-input mutual information (1/B) sum_b log2(1 + snr * gamma_b)."""
    gamma = np.asarray(gamma, dtype=float)
    if snr < 0 or np.any(gamma < 0):
        raise ValueError("snr and power gains must be nonnegative")
    value = float(np.mean(np.log2(1.0 + snr * gamma)))
    return MiEstimate(value, 0.0, "closed_form")


def gaussian_mi_logdet(snr, gamma, rotations):
    """Gaussian-input MI evaluated through the rotated log-det form.

    Equals gaussian_mi for unitary rotations; kept as an independent route for
    checking that invariance.
    """
    gamma = np.asarray(gamma, dtype=float)
    h = np.sqrt(gamma)
    total = 0.0
    offset = 0
    for rot in rotations:
        n = rot.dim
        hk = np.diag(h[offset : offset + n])
        mat = np.eye(n) + snr * hk @ rot.entries @ rot.entries.T @ hk.T
        sign, logdet = np.linalg.slogdet(mat)
        if sign <= 0:
            raise ValueError("log-det argument is not positive definite")
        total += logdet / LN2
        offset += n
    if offset != gamma.shape[0]:
        raise ValueError("rotation dimensions do not sum to the number of blocks")
    return total / gamma.shape[0]


def _candidate_matrix(constellation, rot_dim):
    """All |S|^N symbol vectors, shape (C, N)."""
    grids = np.meshgrid(*([constellation.points] * rot_dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _scaled_candidates(constellation, rotation, h, snr):
    """sqrt(snr) * H M s for every candidate s; h broadcastable to (..., N)."""
    cand = _candidate_matrix(constellation, rotation.dim)
    rotated = cand @ rotation.entries.T
    return np.sqrt(snr) * np.asarray(h)[..., None, :] * rotated


def _log_terms_exhaustive(a_scaled, z):
    """Per-noise-sample values of log2(1 + sum_{s' != s} exp(a)), averaged over s.

    a_scaled: (T, C, N) scaled candidates, z: (T, n, N) noise draws shared by
    the outer symbols of each row.  Returns (T, n).

    The summand separates as exp(-D[s,s']) * exp(2 V[s',i]) * exp(-2 V[s,i])
    with D the pairwise squared distances and V[c,i] = Re<A_c, z_i>, so the
    inner sum is a (max-stabilized) matrix product; the s' = s term is
    exp(0) = 1 times its own column and is subtracted exactly.
    """
    aa = np.sum(np.abs(a_scaled) ** 2, axis=-1)  # (T, C)
    gram = np.einsum("tcn,tdn->tcd", a_scaled, a_scaled.conj()).real
    dist = aa[:, :, None] + aa[:, None, :] - 2.0 * gram  # ||A_s - A_s'||^2
    np.maximum(dist, 0.0, out=dist)
    g_mat = np.exp(-dist)  # (T, C, C), unit diagonal
    v2 = 2.0 * np.einsum("tcn,tin->tci", a_scaled, z.conj()).real  # (T, C, n)
    mx = v2.max(axis=1, keepdims=True)
    e_mat = np.exp(v2 - mx)
    q = np.matmul(g_mat, e_mat) - e_mat  # excludes s' = s
    np.maximum(q, 0.0, out=q)  # guard rounding in the subtraction
    with np.errstate(divide="ignore"):
        t_log = np.log(q) + (mx - v2)
    log_terms = np.logaddexp(0.0, t_log) / LN2  # log2(1 + sum)
    return log_terms.mean(axis=1)


def block_mi_mc_batch(constellation, rotation, h, snr, n_samples, rng, max_elems=2**23):
    """Monte Carlo block MI for a batch of channel draws.

    h: (T, N) amplitudes.  Exhaustive over outer symbols; per row, n_samples
    noise draws are shared across the outer symbols so the row's standard
    error is the spread of the per-draw symbol-averaged terms.
    Returns (values (T,), std_errors (T,)), values clamped to [0, MN].
    """
    h = np.atleast_2d(np.asarray(h, dtype=float))
    n_rot = rotation.dim
    mn = constellation.bits_per_symbol * n_rot
    c = constellation.size**n_rot
    # memory per row ~ C^2 (pair table) + C * n (noise projections)
    t_chunk = max(1, int(max_elems // (c * c + c * min(n_samples, 256))))
    z_chunk = max(1, int(max_elems // max(1, t_chunk * c)))
    values = np.empty(h.shape[0])
    errors = np.empty(h.shape[0])
    for lo in range(0, h.shape[0], t_chunk):
        hs = h[lo : lo + t_chunk]
        a_scaled = _scaled_candidates(constellation, rotation, hs, snr)
        z = complex_noise(rng, (hs.shape[0], n_samples, n_rot))
        g = np.empty((hs.shape[0], n_samples))
        for zl in range(0, n_samples, z_chunk):
            g[:, zl : zl + z_chunk] = _log_terms_exhaustive(
                a_scaled, z[:, zl : zl + z_chunk]
            )
        values[lo : lo + t_chunk] = np.clip(mn - g.mean(axis=1), 0.0, mn)
        errors[lo : lo + t_chunk] = g.std(axis=1, ddof=1) / math.sqrt(n_samples)
    return values, errors


def _block_mi_mc_joint(constellation, rotation, h, snr, n_samples, rng, chunk=32):
    """Monte Carlo with jointly sampled (outer symbol, noise) pairs.

    Needed when 2^{MN} is too large to enumerate outer symbols; the inner sum
    over s' is still exhaustive.  Returns (value, std_error).
    """
    n_rot = rotation.dim
    mn = constellation.bits_per_symbol * n_rot
    a_all = _scaled_candidates(constellation, rotation, np.asarray(h, float), snr)
    aa = np.sum(np.abs(a_all) ** 2, axis=-1)
    c = a_all.shape[0]
    s_idx = rng.integers(0, c, size=n_samples)
    z = complex_noise(rng, (n_samples, n_rot))
    g = np.empty(n_samples)
    for lo in range(0, n_samples, chunk):
        sel = s_idx[lo : lo + chunk]
        zc = z[lo : lo + chunk]
        gram = (a_all[sel] @ a_all.conj().T).real  # (nc, C)
        u = np.sum((a_all[sel] * zc.conj()).real, axis=-1)  # Re<A_s, z>
        w = (zc.conj() @ a_all.T).real  # Re<A_c, z>
        a = -(aa[sel][:, None] + aa[None, :] - 2.0 * gram) - 2.0 * (u[:, None] - w)
        a[np.arange(len(sel)), sel] = -np.inf
        g[lo : lo + chunk] = np.logaddexp(0.0, logsumexp(a, axis=1)) / LN2
    value = float(np.clip(mn - g.mean(), 0.0, mn))
    return value, float(g.std(ddof=1) / math.sqrt(n_samples))


@lru_cache(maxsize=8)
def _hermite_nodes(quad_points, rot_dim):
    """Complex noise nodes and normalized weights for E over CN(0,1)^N."""
    t, w = np.polynomial.hermite.hermgauss(quad_points)
    axes = [t] * (2 * rot_dim)
    grids = np.meshgrid(*axes, indexing="ij")
    flat = [g.ravel() for g in grids]
    z = np.stack(
        [flat[2 * i] + 1j * flat[2 * i + 1] for i in range(rot_dim)], axis=-1
    )
    weights = np.ones(z.shape[0])
    wg = np.meshgrid(*([w] * (2 * rot_dim)), indexing="ij")
    for g in wg:
        weights = weights * g.ravel()
    weights /= math.pi**rot_dim
    z.setflags(write=False)
    weights.setflags(write=False)
    return z, weights


def block_mi_gauss_hermite(constellation, rotation, h, snr, quad_points=16):
    """Deterministic block MI via Gauss-Hermite quadrature (rot_dim <= 2)."""
    n_rot = rotation.dim
    if n_rot > 2:
        raise ValueError(
            "gauss_hermite is limited to rotation dimension <= 2 "
            "(cost grows as Q^(2N)); use monte_carlo instead"
        )
    mn = constellation.bits_per_symbol * n_rot
    z, weights = _hermite_nodes(quad_points, n_rot)
    a_all = _scaled_candidates(constellation, rotation, np.asarray(h, float), snr)
    aa = np.sum(np.abs(a_all) ** 2, axis=-1)
    gram = (a_all @ a_all.conj().T).real
    dist = aa[:, None] + aa[None, :] - 2.0 * gram
    np.maximum(dist, 0.0, out=dist)
    g_mat = np.exp(-dist)
    v2 = 2.0 * (a_all @ z.conj().T).real  # (C, K)
    mx = v2.max(axis=0, keepdims=True)
    e_mat = np.exp(v2 - mx)
    q = g_mat @ e_mat - e_mat
    np.maximum(q, 0.0, out=q)
    with np.errstate(divide="ignore"):
        t_log = np.log(q) + (mx - v2)
    log_term = np.logaddexp(0.0, t_log) / LN2  # (C, K)
    acc = float(np.mean(log_term @ weights))
    return float(np.clip(mn - acc, 0.0, mn))


def discrete_block_mi(
    constellation,
    rotation,
    h,
    snr,
    method="auto",
    n_samples=2000,
    quad_points=16,
    rng=None,
    seed=0,
    quad_cost_cap=QUAD_COST_CAP,
    exhaustive_cap=EXHAUSTIVE_OUTER_CAP,
):
    """Mutual information of one rotated block, in bits per block (max M*N).

    method: "gauss_hermite" (N <= 2, deterministic), "monte_carlo", or "auto"
    (quadrature where affordable, Monte Carlo otherwise).
    """
    h = np.asarray(h, dtype=float)
    if h.shape != (rotation.dim,):
        raise ValueError(f"h must have length {rotation.dim}, got shape {h.shape}")
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    c = constellation.size**rotation.dim
    quad_cost = float(quad_points) ** (2 * rotation.dim) * float(c) ** 2
    if method == "auto":
        method = (
            "gauss_hermite"
            if rotation.dim <= 2 and quad_cost <= quad_cost_cap
            else "monte_carlo"
        )
    if method == "gauss_hermite":
        if rotation.dim > 2:
            raise ValueError(
                "gauss_hermite is limited to rotation dimension <= 2; use monte_carlo"
            )
        if quad_cost > quad_cost_cap:
            raise ValueError(
                f"quadrature cost {quad_cost:.2e} exceeds the cap {quad_cost_cap:.2e} "
                "for this constellation/rotation; use monte_carlo or raise quad_cost_cap"
            )
        value = block_mi_gauss_hermite(constellation, rotation, h, snr, quad_points)
        return MiEstimate(value, 0.0, f"gauss_hermite({quad_points})", per_block=True)
    if method != "monte_carlo":
        raise ValueError(f"unknown method {method!r}")
    if rng is None:
        rng = derive_rng(seed)
    if c <= exhaustive_cap:
        values, errs = block_mi_mc_batch(
            constellation, rotation, h[None, :], snr, n_samples, rng
        )
        value, err = float(values[0]), float(errs[0])
    else:
        value, err = _block_mi_mc_joint(constellation, rotation, h, snr, n_samples, rng)
    return MiEstimate(value, err, f"monte_carlo({n_samples})", per_block=True)


def scheme_mi(
    constellation,
    rotations,
    gamma,
    snr,
    method="auto",
    n_samples=2000,
    quad_points=16,
    rng=None,
    seed=0,
):
    """Mutual information of a K-rotation scheme in bits per channel use.

    gamma: per-block power gains, length B = sum of rotation dimensions.
    """
    gamma = np.asarray(gamma, dtype=float)
    blocks = int(sum(r.dim for r in rotations))
    if gamma.shape != (blocks,):
        raise ValueError(
            f"rotations span {blocks} blocks but gamma has shape {gamma.shape}"
        )
    if rng is None:
        rng = derive_rng(seed)
    h = np.sqrt(gamma)
    total, var, offset = 0.0, 0.0, 0
    methods = []
    for rot in rotations:
        est = discrete_block_mi(
            constellation,
            rot,
            h[offset : offset + rot.dim],
            snr,
            method=method,
            n_samples=n_samples,
            quad_points=quad_points,
            rng=rng,
        )
        total += est.value
        var += est.std_error**2
        methods.append(est.method)
        offset += rot.dim
    label = methods[0] if len(set(methods)) == 1 else "+".join(sorted(set(methods)))
    return MiEstimate(total / blocks, math.sqrt(var) / blocks, label)


class ScalarMiCurve:
    """Single-block (N=1) MI as a fast function of x = snr * gamma.

    Exact Gauss-Hermite values on a dense log grid, monotone (PCHIP)
    interpolation in between, linear-in-x below the grid and saturated at M
    above it.  Interpolation error is far below any Monte Carlo threshold
    band (checked in the test suite).
    """

    def __init__(self, constellation, quad_points=16, decades=(-6.0, 9.0), per_decade=32):
        self.constellation = constellation
        self.bits = constellation.bits_per_symbol
        n_pts = int((decades[1] - decades[0]) * per_decade) + 1
        logx = np.linspace(decades[0], decades[1], n_pts)
        rot = identity(1)
        vals = np.array(
            [
                block_mi_gauss_hermite(constellation, rot, np.ones(1), 10.0**lx, quad_points)
                for lx in logx
            ]
        )
        self._logx = logx
        self._interp = PchipInterpolator(logx, vals, extrapolate=False)
        self._x_lo = 10.0 ** logx[0]
        self._x_hi = 10.0 ** logx[-1]
        self._v_lo = vals[0]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("effective snr must be nonnegative")
        out = np.empty_like(x)
        low = x < self._x_lo
        high = x > self._x_hi
        mid = ~(low | high)
        out[low] = self._v_lo * (x[low] / self._x_lo)
        out[high] = float(self.bits)
        out[mid] = self._interp(np.log10(x[mid]))
        return out
