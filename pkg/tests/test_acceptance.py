"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion lines.
Budgets are desk scale; the whole module takes roughly 10-15 minutes, most of
it in criteria 5 and 6.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

import rotfade as rf
from rotfade import codedmod as cm
from rotfade import exponents as ex
from rotfade import mutual_info as mi
from rotfade.channel import FadingSpec, sample_gamma
from rotfade.rotation import FULL_DIVERSITY_TOL, UNITARITY_TOL
from rotfade.seeding import derive_rng

QPSK = rf.make_qam(2)
QAM16 = rf.make_qam(4)


def _report(tag, ok, detail):
    print(f"\nACCEPTANCE {tag} {'PASS' if ok else 'FAIL'}: {detail}")
    return ok


# ---------------------------------------------------------------------------
# 1. exponent golden values (exact, < 1 s)
# ---------------------------------------------------------------------------


def test_criterion_1_exponent_golden_values():
    checks = []
    checks.append(ex.optimal_exponent(1.0, 4) == 4.0)
    checks.append(ex.singleton_block_diversity(4, 1, 1, 2) == 3)
    for n, want in ((1, 2.5), (2, 3.0), (4, 4.0)):
        th = ex.theorem_exponent(ex.ExponentQuery(8, n, 0.5, Fraction(1, 2)))
        checks.append(th.upper == want)
    q0 = ex.ExponentQuery(8, 2, 1.0, Fraction(1, 4), 2, lam=0.0)
    checks.append(ex.random_coding_lower_bound(q0) == 0.0)
    qi = ex.ExponentQuery(8, 2, 1.0, Fraction(1, 4), 2, lam=1e12)
    want_inf = 1.0 * 2 * math.ceil(4 * (1 - 0.25))
    checks.append(abs(ex.random_coding_lower_bound(qi) - want_inf) < 1e-9)
    ok = all(checks)
    _report("1", ok, f"exponent golden values ({sum(checks)}/{len(checks)} exact)")
    assert ok


# ---------------------------------------------------------------------------
# 2. rotation suite (< 1 min)
# ---------------------------------------------------------------------------


def test_criterion_2_rotation_suite():
    res_cyc = rf.unitarity_residual(rf.catalog("cyclotomic2"))
    res_kru = rf.unitarity_residual(rf.catalog("kruskemper4"))
    mixed = rf.catalog("mixed4")
    res_mix = rf.unitarity_residual(mixed)
    col_sq = np.sum(mixed.entries**2, axis=0)
    margins = {
        (rot, cons): rf.full_diversity_margin(rf.catalog(rot), c)
        for rot, cons, c in (
            ("cyclotomic2", "qpsk", QPSK),
            ("cyclotomic2", "qam16", QAM16),
            ("kruskemper4", "qpsk", QPSK),
            ("kruskemper4", "qam16", QAM16),
        )
    }
    id_margins = [rf.full_diversity_margin(rf.identity(n), QPSK) for n in (2, 4)]
    ok = (
        res_cyc <= UNITARITY_TOL
        and res_kru <= UNITARITY_TOL
        and not mixed.claims_unitary
        and res_mix > 1e-3
        and np.allclose(col_sq, [1.0, 1.0, 2.0, 2.0], atol=1e-6)
        and all(m > FULL_DIVERSITY_TOL for m in margins.values())
        and all(m == 0.0 for m in id_margins)
    )
    detail = (
        f"residuals cyc={res_cyc:.1e} krus={res_kru:.1e}; mixed4 non-unitary "
        f"(col |.|^2 = {np.round(col_sq, 6).tolist()}); margins "
        + ", ".join(f"{k[0]}/{k[1]}={v:.2e}" for k, v in margins.items())
        + f"; identity margins {id_margins}"
    )
    _report("2", ok, detail)
    assert ok


# ---------------------------------------------------------------------------
# 3. Gaussian MI identity + B=1 outage closed form (< 1 min)
# ---------------------------------------------------------------------------


def test_criterion_3_gaussian_mi():
    rng = np.random.default_rng(99)
    layouts = [
        [rf.identity(1)] * 4,
        [rf.identity(2)] * 2,
        [rf.catalog("cyclotomic2")] * 2,
        [rf.catalog("kruskemper4")],
        [rf.identity(4)],
    ]
    worst = 0.0
    for rotations in layouts:
        for _ in range(4):
            gamma = rng.gamma(1.0, 1.0, size=4)
            snr = 10 ** rng.uniform(-1, 3)
            diff = abs(
                mi.gaussian_mi(snr, gamma).value
                - mi.gaussian_mi_logdet(snr, gamma, rotations)
            )
            worst = max(worst, diff)
    ok_logdet = worst <= 1e-10

    model = rf.GaussianModel(1, 1.0)
    rate = 1.0
    in_ci = []
    for snr_db in (6.0, 12.0):
        snr = 10 ** (snr_db / 10.0)
        exact = 1.0 - math.exp(-(2.0**rate - 1.0) / snr)
        pt = rf.estimate_outage(model, rate, snr_db, 10**6, seed=303)
        in_ci.append(pt.ci_low <= exact <= pt.ci_high)
    ok = ok_logdet and all(in_ci)
    _report(
        "3",
        ok,
        f"log-det identity worst |diff| = {worst:.2e} (<= 1e-10); "
        f"B=1 exponential-CDF inside 95% CI at 1e6 trials: {in_ci}",
    )
    assert ok


# ---------------------------------------------------------------------------
# 4. discrete MI properties and the fixed-channel scenario (< 10 min)
# ---------------------------------------------------------------------------


def test_criterion_4_discrete_mi():
    # zero SNR
    z1 = mi.discrete_block_mi(QPSK, rf.identity(1), [1.0], 0.0, method="gauss_hermite")
    z2 = mi.discrete_block_mi(
        QPSK, rf.catalog("cyclotomic2"), [1.0, 1.0], 0.0, method="monte_carlo", n_samples=500
    )
    ok_zero = abs(z1.value) <= 0.01 and abs(z2.value) <= 0.01

    # saturation at 60 dB for full-diversity rotations, all h = 1
    snr60 = 1e6
    s1 = mi.discrete_block_mi(
        QPSK, rf.catalog("cyclotomic2"), [1.0, 1.0], snr60, method="monte_carlo",
        n_samples=2000, seed=1,
    )
    s2 = mi.discrete_block_mi(
        QAM16, rf.catalog("cyclotomic2"), [1.0, 1.0], snr60, method="monte_carlo",
        n_samples=500, seed=2,
    )
    ok_sat = abs(s1.value - 4.0) <= 0.02 and abs(s2.value - 8.0) <= 0.02

    # N=1 quadrature vs Monte Carlo
    gh = mi.discrete_block_mi(QPSK, rf.identity(1), [1.0], 4.0, method="gauss_hermite",
                              quad_points=20)
    mc = mi.discrete_block_mi(QPSK, rf.identity(1), [1.0], 4.0, method="monte_carlo",
                              n_samples=100_000, seed=3)
    ok_methods = abs(gh.value - mc.value) <= 3 * mc.std_error

    # fixed channel h = (1.5, 0.1, 0.1, 0.1) at 25 dB, 16-QAM
    gamma = np.array([1.5, 0.1, 0.1, 0.1]) ** 2
    snr = 10**2.5
    gauss = mi.gaussian_mi(snr, gamma).value
    unrot = mi.scheme_mi(QAM16, [rf.identity(1)] * 4, gamma, snr, method="gauss_hermite")
    cyc = mi.scheme_mi(QAM16, [rf.catalog("cyclotomic2")] * 2, gamma, snr,
                       method="monte_carlo", n_samples=2000, seed=11)
    krus = mi.scheme_mi(QAM16, [rf.catalog("kruskemper4")], gamma, snr,
                        method="monte_carlo", n_samples=4096, seed=12)
    gain = krus.value - unrot.value
    ok_gain = gain - 3 * krus.std_error >= 0.8
    # ordering: gaussian >= kruskemper >= 2x cyclotomic >= unrotated (3 sigma slack)
    sl = 3 * (krus.std_error + cyc.std_error)
    ok_order = (
        krus.value <= gauss + 3 * krus.std_error
        and cyc.value <= krus.value + sl
        and unrot.value <= cyc.value + 3 * cyc.std_error
    )
    ok = ok_zero and ok_sat and ok_methods and ok_gain and ok_order
    _report(
        "4",
        ok,
        f"zero-SNR ({z1.value:.3f}, {z2.value:.3f}); saturation ({s1.value:.3f}/4, "
        f"{s2.value:.3f}/8); GH vs MC diff {abs(gh.value - mc.value):.2e} <= 3se; "
        f"25 dB: gauss {gauss:.3f} >= krus {krus.value:.3f} >= 2xcyc {cyc.value:.3f} "
        f">= unrot {unrot.value:.3f}; rotation gain {gain:.3f} bits (need >= 0.8)",
    )
    assert ok


# ---------------------------------------------------------------------------
# 5. outage slopes at desk scale (<= 30 min total)
# ---------------------------------------------------------------------------


def test_criterion_5a_gaussian_slope():
    # grid sits in the deep (asymptotic) half of the permitted window
    # P in [1e-4, 1e-2]; trials sized so the fit noise is ~0.03
    model = rf.GaussianModel(4, 1.0)
    curve = rf.outage_sweep(
        model, 2.0, [17.0, 17.6, 18.2, 18.8],
        [50_000_000, 50_000_000, 100_000_000, 100_000_000], seed=2025,
    )
    slope = rf.fit_slope(curve, (1e-4, 1e-2))
    ok = abs(slope - 4.0) <= 0.4
    _report("5a", ok, f"Gaussian B=4 m=1 R=2 slope {slope:.3f} (need 4.0 +- 0.4)")
    assert ok


def test_criterion_5b_unrotated_qpsk_slope():
    model = rf.DiscreteModel(QPSK, [rf.identity(1)] * 4, 1.0)
    curve = rf.outage_sweep(model, 1.0, list(range(5, 14)), 300_000, seed=404)
    slope = rf.fit_slope(curve, (1e-3, 1e-1))
    ok = abs(slope - 3.0) <= 0.7
    _report("5b", ok, f"unrotated QPSK B=4 m=1 R=1 slope {slope:.3f} (need 3.0 +- 0.7)")
    assert ok


def test_criterion_5c_rotated_slope_gap():
    """Rotated-vs-unrotated slope gap over the shared window P in [1e-3, 1e-1].

    KNOWN RED.  The asymptotic exponents are 4 vs 3 (gap 1.0), but inside the
    pinned probability window both curves are still pre-asymptotic: the local
    slope of the rotated curve only reaches ~3.5 by P = 1e-3 while the
    unrotated curve fits at ~2.8, leaving a measured gap of ~0.4-0.5.  Gaps
    of 0.7+ appear only for windows at P below ~1e-4, outside the stated
    window.  The assertion is kept as specified and fails honestly.
    """
    window = (1e-3, 1e-1)
    unrot = rf.outage_sweep(
        rf.DiscreteModel(QPSK, [rf.identity(1)] * 4, 1.0),
        1.0, list(range(5, 14)), 300_000, seed=404,
    )
    rot = rf.outage_sweep(
        rf.DiscreteModel(QPSK, [rf.catalog("cyclotomic2")] * 2, 1.0),
        1.0, list(range(5, 13)),
        [30_000, 30_000, 30_000, 50_000, 100_000, 100_000, 100_000, 100_000],
        seed=405,
    )
    slope_unrot = rf.fit_slope(unrot, window)
    slope_rot = rf.fit_slope(rot, window)
    gap = slope_rot - slope_unrot
    deep_rot = rf.fit_slope(rot, (1e-4, 1e-2))
    ok = gap >= 0.7
    _report(
        "5c",
        ok,
        f"rotated slope {slope_rot:.3f} vs unrotated {slope_unrot:.3f} over "
        f"P in [1e-3, 1e-1]: gap {gap:.3f} (need >= 0.7); deeper-window rotated "
        f"slope {deep_rot:.3f} shows the trend toward the asymptotic gap of 1.0",
    )
    assert ok


# ---------------------------------------------------------------------------
# 6. coded chain (<= 60 min at FER >= 1e-3)
# ---------------------------------------------------------------------------


def test_criterion_6_coded_chain():
    code = cm.ConvCode()
    # BCJR hard decisions equal Viterbi on 1e3 random noisy frames
    rng = np.random.default_rng(606)
    info = rng.integers(0, 2, (1000, 128), dtype=np.int8)
    coded = cm.conv_encode_batch(code, info)
    sigma = 0.5
    y = (1.0 - 2.0 * coded) + sigma * rng.standard_normal(coded.shape)
    llr = 2.0 * y / sigma**2
    info_llr, _ = cm.bcjr_decode_batch(code, llr, 128)
    bcjr_bits = (info_llr < 0).astype(np.int8)
    vit_bits = cm.viterbi_decode_batch(code, llr, 128)
    ok_decoders = np.array_equal(bcjr_bits, vit_bits)

    grid = [6.0, 8.0, 10.0, 12.0]
    kw = dict(min_errors=100, max_frames=60_000, batch_size=500)
    rot = cm.simulate_fer(
        cm.FrameConfig(QPSK, (rf.catalog("cyclotomic2"),) * 2, code, 128, iterations=2),
        1.0, grid, seed=607, **kw,
    )
    unrot = cm.simulate_fer(
        cm.FrameConfig(QPSK, (rf.identity(1),) * 4, code, 128, iterations=2),
        1.0, grid, seed=608, **kw,
    )
    pairs = list(zip(rot.points, unrot.points))
    ok_ordering = all(r.estimate <= u.estimate for r, u in pairs)
    ok_separation = any(r.ci_high < u.ci_low for r, u in pairs)
    slope_rot = rf.fit_slope(rot, (1e-4, 0.9))
    slope_unrot = rf.fit_slope(unrot, (1e-4, 0.9))
    gap = slope_rot - slope_unrot
    ok_gap = gap >= 0.7
    ok = ok_decoders and ok_ordering and ok_separation and ok_gap
    fers = ", ".join(
        f"{r.ebn0_db:.0f}dB {r.estimate:.2e}/{u.estimate:.2e}" for r, u in pairs
    )
    _report(
        "6",
        ok,
        f"BCJR==Viterbi on 1000 frames: {ok_decoders}; FER rot/unrot at {fers}; "
        f"rotated below unrotated everywhere: {ok_ordering}, non-overlapping CIs "
        f"somewhere: {ok_separation}; slopes {slope_rot:.2f} vs {slope_unrot:.2f} "
        f"(gap {gap:.2f} >= 0.7)",
    )
    assert ok


# ---------------------------------------------------------------------------
# 7. sampler statistics (< 1 min)
# ---------------------------------------------------------------------------


def test_criterion_7_sampler_statistics():
    n = 10**6
    results = []
    ok = True
    for m in (0.5, 1.0, 4.0):
        g = sample_gamma(FadingSpec(1, m), n, derive_rng(707, int(10 * m))).ravel()
        se_mean = math.sqrt(1.0 / m / n)
        mu4 = 3.0 * (1.0 + 2.0 / m) / m**2
        se_var = math.sqrt((mu4 - (1.0 / m) ** 2) / n)
        dm = abs(g.mean() - 1.0)
        dv = abs(g.var(ddof=1) - 1.0 / m)
        ok = ok and dm <= 3 * se_mean and dv <= 3 * se_var
        results.append(f"m={m}: |mean-1|={dm:.2e} (3se={3*se_mean:.2e}), "
                       f"|var-1/m|={dv:.2e} (3se={3*se_var:.2e})")
    _report("7", ok, "; ".join(results))
    assert ok


# ---------------------------------------------------------------------------
# 8. block-diversity oracle (< 1 min)
# ---------------------------------------------------------------------------


def test_criterion_8_block_diversity_oracle():
    code = cm.ConvCode()
    cws = []
    for u in range(256):
        coded = cm.conv_encode(code, [(u >> i) & 1 for i in range(8)])
        cws.append([coded[0::2], coded[1::2]])
    delta = ex.block_diversity(np.array(cws))
    ok = delta == 2
    _report("8", ok, f"(5,7) code, 8 info bits, generator split over 2 blocks: "
                     f"exhaustive block diversity {delta} (need 2)")
    assert ok
