"""Monte Carlo outage probability and empirical diversity-slope fitting.

Outage is the probability that the instantaneous mutual information of a
sampled channel falls at or below the transmission rate R.  For Gaussian
inputs the per-realization MI is closed form.  For discrete rotated inputs,
single-block (N=1) contributions are evaluated through an exact quadrature
table while N >= 2 blocks use the Monte Carlo estimator with an adaptive
sample count: trials whose MI estimate sits within 3 standard errors of the
threshold are re-estimated at larger sample counts until the ambiguity
clears or a cap is reached.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import FadingSpec, sample_gamma
from .mutual_info import (
    ScalarMiCurve,
    _block_mi_mc_joint,
    block_mi_gauss_hermite,
    block_mi_mc_batch,
)
from .seeding import derive_rng

WILSON_Z = 1.959963984540054  # two-sided 95%


def wilson_interval(successes, trials, z=WILSON_Z):
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("need at least one trial")
    n = float(trials)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    # clamp so the interval always brackets the point estimate despite rounding
    return min(p, max(0.0, center - half)), max(p, min(1.0, center + half))


@dataclass(frozen=True)
class CurvePoint:
    snr_db: float
    ebn0_db: float
    estimate: float
    ci_low: float
    ci_high: float
    trials: int
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SimCurve:
    points: tuple
    meta: dict

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        snrs = [p.snr_db for p in self.points]
        if any(b <= a for a, b in zip(snrs, snrs[1:])):
            raise ValueError("curve points must have strictly increasing snr_db")
        for p in self.points:
            if not (0.0 <= p.estimate <= 1.0 and p.ci_low <= p.estimate <= p.ci_high):
                raise ValueError(f"malformed curve point {p}")


@dataclass(frozen=True)
class GaussianModel:
    blocks: int
    m: float

    @property
    def name(self):
        return "gaussian"


@dataclass(frozen=True)
class DiscreteModel:
    constellation: object
    rotations: tuple
    m: float

    def __post_init__(self):
        object.__setattr__(self, "rotations", tuple(self.rotations))

    @property
    def blocks(self):
        return int(sum(r.dim for r in self.rotations))

    @property
    def name(self):
        rots = "+".join(r.name for r in self.rotations)
        return f"{self.constellation.name}/{rots}"


def _gaussian_chunk(model, rate, snr, seed, point_key, chunk_idx, n):
    rng = derive_rng(seed, point_key, chunk_idx, 0)
    gamma = sample_gamma(FadingSpec(model.blocks, model.m), n, rng)
    mi = np.mean(np.log2(1.0 + snr * gamma), axis=1)
    return int(np.count_nonzero(mi <= rate)), 0


def _discrete_chunk(model, rate, snr, seed, point_key, chunk_idx, n, curve_n1, mc_samples, mc_cap):
    rng = derive_rng(seed, point_key, chunk_idx, 0)
    b = model.blocks
    gamma = sample_gamma(FadingSpec(b, model.m), n, rng)
    h = np.sqrt(gamma)

    mi_exact = np.zeros(n)  # aggregate over N = 1 blocks (quadrature table)
    mi_mc = np.zeros(n)
    var_mc = np.zeros(n)
    mc_dims = []
    offset = 0
    for k, rot in enumerate(model.rotations):
        sl = slice(offset, offset + rot.dim)
        if rot.dim == 1:
            mi_exact += curve_n1(snr * gamma[:, offset])
        else:
            mc_dims.append((k, rot, sl))
        offset += rot.dim

    def run_mc(rows, n_samples, stage):
        vals = np.zeros(rows.shape[0])
        var = np.zeros(rows.shape[0])
        for k, rot, sl in mc_dims:
            rng_k = derive_rng(seed, point_key, chunk_idx, 1 + stage * 64 + k)
            if model.constellation.size**rot.dim <= 4096:
                v, e = block_mi_mc_batch(
                    model.constellation, rot, h[rows][:, sl], snr, n_samples, rng_k
                )
            else:  # candidate set too large to enumerate as outer symbols
                v = np.empty(rows.shape[0])
                e = np.empty(rows.shape[0])
                for i, row in enumerate(rows):
                    v[i], e[i] = _block_mi_mc_joint(
                        model.constellation, rot, h[row, sl], snr, n_samples, rng_k
                    )
            vals += v
            var += e**2
        return vals, var

    if mc_dims:
        all_rows = np.arange(n)
        mi_mc, var_mc = run_mc(all_rows, mc_samples, 0)
        n_cur, stage = mc_samples, 0
        while n_cur < mc_cap:
            i_est = (mi_exact + mi_mc) / b
            se = np.sqrt(var_mc) / b
            amb = np.flatnonzero(np.abs(i_est - rate) < 3.0 * se)
            if amb.size == 0:
                break
            n_cur = min(n_cur * 4, mc_cap)
            stage += 1
            v, var = run_mc(amb, n_cur, stage)
            mi_mc[amb] = v
            var_mc[amb] = var
        # final arbitration: trials still inside the ambiguity band are
        # re-classified with exact quadrature where the dimension allows it
        if all(rot.dim <= 2 and model.constellation.size**rot.dim <= 256 for _, rot, _ in mc_dims):
            i_est = (mi_exact + mi_mc) / b
            se = np.sqrt(var_mc) / b
            amb = np.flatnonzero(np.abs(i_est - rate) < 3.0 * se)
            for row in amb:
                total = 0.0
                for _, rot, sl in mc_dims:
                    total += block_mi_gauss_hermite(
                        model.constellation, rot, h[row, sl], snr, quad_points=16
                    )
                mi_mc[row] = total
                var_mc[row] = 0.0

    i_est = (mi_exact + mi_mc) / b
    se = np.sqrt(var_mc) / b
    n_out = int(np.count_nonzero(i_est <= rate))
    n_amb = int(np.count_nonzero(np.abs(i_est - rate) < 3.0 * se)) if mc_dims else 0
    return n_out, n_amb


def estimate_outage(
    model,
    rate,
    snr_db,
    trials,
    seed,
    point_key=0,
    threads=1,
    chunk_size=None,
    mc_samples=64,
    mc_cap=4096,
    quad_points=16,
    _curve_cache=None,
):
    """One outage curve point at the given SNR (dB)."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    if trials < 1:
        raise ValueError("need at least one trial")
    snr = 10.0 ** (snr_db / 10.0)
    gaussian = isinstance(model, GaussianModel)
    if chunk_size is None:
        chunk_size = 1 << 17 if gaussian else 1 << 10

    curve_n1 = None
    if not gaussian and any(r.dim == 1 for r in model.rotations):
        if _curve_cache is not None:
            curve_n1 = _curve_cache
        else:
            curve_n1 = ScalarMiCurve(model.constellation, quad_points=quad_points)

    sizes = [chunk_size] * (trials // chunk_size)
    if trials % chunk_size:
        sizes.append(trials % chunk_size)

    def work(args):
        idx, n = args
        if gaussian:
            return _gaussian_chunk(model, rate, snr, seed, point_key, idx, n)
        return _discrete_chunk(
            model, rate, snr, seed, point_key, idx, n, curve_n1, mc_samples, mc_cap
        )

    jobs = list(enumerate(sizes))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]
    n_out = sum(r[0] for r in results)
    n_amb = sum(r[1] for r in results)

    lo, hi = wilson_interval(n_out, trials)
    extras = {}
    if not gaussian:
        frac = n_amb / trials
        extras["ambiguous_fraction"] = frac
        extras["threshold_flag"] = frac > 0.05
    return CurvePoint(
        snr_db=float(snr_db),
        ebn0_db=float(snr_db - 10.0 * math.log10(rate)),
        estimate=n_out / trials,
        ci_low=lo,
        ci_high=hi,
        trials=trials,
        extras=extras,
    )


def outage_sweep(
    model,
    rate,
    snr_db_list,
    trials,
    seed,
    threads=1,
    mc_samples=64,
    mc_cap=4096,
    quad_points=16,
):
    """Outage curve over an SNR grid.  ``trials`` may be an int or a per-point list."""
    snrs = list(snr_db_list)
    if isinstance(trials, int):
        trials = [trials] * len(snrs)
    curve_cache = None
    if isinstance(model, DiscreteModel) and any(r.dim == 1 for r in model.rotations):
        curve_cache = ScalarMiCurve(model.constellation, quad_points=quad_points)
    points = [
        estimate_outage(
            model,
            rate,
            s,
            t,
            seed,
            point_key=i,
            threads=threads,
            mc_samples=mc_samples,
            mc_cap=mc_cap,
            quad_points=quad_points,
            _curve_cache=curve_cache,
        )
        for i, (s, t) in enumerate(zip(snrs, trials))
    ]
    meta = {
        "model": model.name,
        "rate": rate,
        "blocks": model.blocks,
        "m": model.m,
        "seed": seed,
    }
    return SimCurve(tuple(points), meta)


def fit_slope(curve, p_range):
    """Least-squares diversity slope of -log10(P) vs log10(SNR).

    Uses curve points whose estimate lies in [p_lo, p_hi] and whose confidence
    interval is narrower than a factor of 2 around the estimate.
    """
    p_lo, p_hi = p_range
    if not 0 < p_lo < p_hi:
        raise ValueError("need 0 < p_lo < p_hi")
    xs, ys = [], []
    for p in curve.points:
        if p.estimate <= 0 or not (p_lo <= p.estimate <= p_hi):
            continue
        if p.ci_high > 2.0 * p.estimate or p.ci_low < 0.5 * p.estimate:
            continue
        xs.append(p.snr_db / 10.0)
        ys.append(-math.log10(p.estimate))
    if len(xs) < 3:
        raise ValueError(
            f"only {len(xs)} qualified points in p-range [{p_lo}, {p_hi}]; need >= 3"
        )
    slope = np.polyfit(np.asarray(xs), np.asarray(ys), 1)[0]
    return float(slope)
