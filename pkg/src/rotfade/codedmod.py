"""End-to-end coded modulation over rotated blocks.

Chain: convolutional encoder (zero tail) -> per-stream interleaving ->
QAM mapping onto K rotated blocks -> block-fading channel -> exhaustive
soft-output demapping <-> trellis (BCJR) decoding, iterated.

Frame layout conventions (documented here because the receiver depends on
them exactly):

* The encoder emits output pairs [o1_t, o2_t] per trellis step.
* With K = 2 rotations the two generator streams feed rotations 1 and 2,
  each stream interleaved within itself (per-frame uniform random
  permutation).  For any other K a single uniform random interleaver is
  applied to the whole coded sequence, which is then split into K contiguous
  streams, so every coded bit lands on a uniformly random block.
* Each stream is padded with known zero "fill" bits up to exactly M*N*L
  bits.  Fill bits are pinned to +LLR_CLAMP at the receiver and excluded
  from rate and error accounting.
* Stream bit i maps to channel use l = i // (M*N) and in-use bit j = i % (M*N);
  bits j in [n*M, (n+1)*M) are the MSB-first label of the symbol on block
  component n.  Rotated transmit vectors are x = M s per channel use.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .channel import FadingSpec, complex_noise, sample_gamma
from .outage import CurvePoint, SimCurve, wilson_interval
from .seeding import derive_rng

LLR_CLAMP = 50.0


# ---------------------------------------------------------------------------
# convolutional code
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvCode:
    """Rate-1/2 feedforward convolutional code given by two octal generators."""

    generators: tuple = (0o5, 0o7)

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(int(g) for g in self.generators))
        if len(self.generators) != 2 or min(self.generators) <= 0:
            raise ValueError("expected a pair of positive generator polynomials")

    @property
    def memory(self):
        return max(g.bit_length() for g in self.generators) - 1

    @property
    def n_states(self):
        return 1 << self.memory

    @property
    def rate(self):
        return 0.5

    def coded_len(self, info_len):
        return 2 * (info_len + self.memory)


@lru_cache(maxsize=None)
def _code_tables(generators):
    """Trellis tables.  State s holds the previous `memory` inputs, most
    recent in the MSB; register = (b << memory) | s aligns with generator
    bits (MSB of the generator taps the current input)."""
    g1, g2 = generators
    mem = max(g1.bit_length(), g2.bit_length()) - 1
    n_states = 1 << mem
    nxt = np.empty((n_states, 2), dtype=np.intp)
    out = np.empty((n_states, 2, 2), dtype=np.int8)
    for s in range(n_states):
        for b in (0, 1):
            reg = (b << mem) | s
            out[s, b, 0] = bin(reg & g1).count("1") & 1
            out[s, b, 1] = bin(reg & g2).count("1") & 1
            nxt[s, b] = (b << (mem - 1)) | (s >> 1)
    # predecessor view: state s' is reached with input b_in[s'] from pa/pb
    s_prime = np.arange(n_states)
    b_in = s_prime >> (mem - 1)
    low = s_prime & ((1 << (mem - 1)) - 1)
    pa, pb = low << 1, (low << 1) | 1
    return {
        "memory": mem,
        "n_states": n_states,
        "next": nxt,
        "out": out,
        "sgn": (1.0 - 2.0 * out).astype(float),
        "b_in": b_in,
        "pred": (pa, pb),
    }


def conv_encode(code, bits):
    """Zero-tail encode one frame; output length 2 * (len(bits) + memory)."""
    return conv_encode_batch(code, np.asarray(bits, dtype=np.int8)[None, :])[0]


def conv_encode_batch(code, bits):
    bits = np.asarray(bits, dtype=np.int8)
    tab = _code_tables(code.generators)
    n_frames, info_len = bits.shape
    steps = info_len + tab["memory"]
    padded = np.concatenate(
        [bits, np.zeros((n_frames, tab["memory"]), dtype=np.int8)], axis=1
    )
    out = np.empty((n_frames, 2 * steps), dtype=np.int8)
    state = np.zeros(n_frames, dtype=np.intp)
    nxt, table = tab["next"], tab["out"]
    for t in range(steps):
        b = padded[:, t].astype(np.intp)
        out[:, 2 * t] = table[state, b, 0]
        out[:, 2 * t + 1] = table[state, b, 1]
        state = nxt[state, b]
    return out


def _branch_halves(tab, l1_t, l2_t, via_pred):
    """Branch log-metrics 0.5 * sum (1-2c) * L for one trellis step."""
    sgn = tab["sgn"]
    if via_pred:
        pa, pb = tab["pred"]
        b_in = tab["b_in"]
        ga = 0.5 * (sgn[pa, b_in, 0] * l1_t[:, None] + sgn[pa, b_in, 1] * l2_t[:, None])
        gb = 0.5 * (sgn[pb, b_in, 0] * l1_t[:, None] + sgn[pb, b_in, 1] * l2_t[:, None])
        return ga, gb
    g0 = 0.5 * (sgn[None, :, 0, 0] * l1_t[:, None] + sgn[None, :, 0, 1] * l2_t[:, None])
    g1 = 0.5 * (sgn[None, :, 1, 0] * l1_t[:, None] + sgn[None, :, 1, 1] * l2_t[:, None])
    return g0, g1


def bcjr_decode_batch(code, coded_llr, info_len):
    """Exact log-domain APP decoding of zero-tail frames.

    coded_llr: (F, 2*(info_len + memory)) channel LLRs, convention
    log P(c=0)/P(c=1).  Returns (info_llr (F, info_len),
    coded_extrinsic (F, 2T)) with the extrinsic clamped to +-LLR_CLAMP.
    """
    tab = _code_tables(code.generators)
    mem, n_states = tab["memory"], tab["n_states"]
    steps = info_len + mem
    coded_llr = np.asarray(coded_llr, dtype=float)
    if coded_llr.ndim != 2 or coded_llr.shape[1] != 2 * steps:
        raise ValueError(
            f"expected coded LLRs of shape (F, {2 * steps}), got {coded_llr.shape}"
        )
    n_frames = coded_llr.shape[0]
    l1, l2 = coded_llr[:, 0::2], coded_llr[:, 1::2]
    pa, pb = tab["pred"]
    b_in, nxt, out = tab["b_in"], tab["next"], tab["out"]

    alpha = np.full((steps + 1, n_frames, n_states), -np.inf)
    alpha[0, :, 0] = 0.0
    for t in range(steps):
        ga, gb = _branch_halves(tab, l1[:, t], l2[:, t], via_pred=True)
        cand = np.logaddexp(alpha[t][:, pa] + ga, alpha[t][:, pb] + gb)
        if t >= info_len:
            cand[:, b_in == 1] = -np.inf
        alpha[t + 1] = cand - cand.max(axis=1, keepdims=True)

    beta = np.full((steps + 1, n_frames, n_states), -np.inf)
    beta[steps, :, 0] = 0.0
    for t in range(steps - 1, -1, -1):
        g0, g1 = _branch_halves(tab, l1[:, t], l2[:, t], via_pred=False)
        b0 = beta[t + 1][:, nxt[:, 0]] + g0
        if t >= info_len:
            cand = b0
        else:
            cand = np.logaddexp(b0, beta[t + 1][:, nxt[:, 1]] + g1)
        beta[t] = cand - cand.max(axis=1, keepdims=True)

    o1_flat = np.concatenate([out[:, 0, 0], out[:, 1, 0]])
    o2_flat = np.concatenate([out[:, 0, 1], out[:, 1, 1]])
    info_llr = np.empty((n_frames, info_len))
    ext = np.empty((n_frames, 2 * steps))
    for t in range(steps):
        g0, g1 = _branch_halves(tab, l1[:, t], l2[:, t], via_pred=False)
        s0 = alpha[t] + g0 + beta[t + 1][:, nxt[:, 0]]
        if t >= info_len:
            s1 = np.full_like(s0, -np.inf)
        else:
            s1 = alpha[t] + g1 + beta[t + 1][:, nxt[:, 1]]
            info_llr[:, t] = logsumexp(s0, axis=1) - logsumexp(s1, axis=1)
        stacked = np.concatenate([s0, s1], axis=1)  # transitions (s, b=0) then (s, b=1)
        for j, (oj, lj) in enumerate(((o1_flat, l1), (o2_flat, l2))):
            post = logsumexp(stacked[:, oj == 0], axis=1) - logsumexp(
                stacked[:, oj == 1], axis=1
            )
            ext[:, 2 * t + j] = post - lj[:, t]
    return info_llr, np.clip(ext, -LLR_CLAMP, LLR_CLAMP)


def bcjr_decode(code, coded_llr, info_len):
    """Single-frame wrapper: returns (info_bits, info_llr, coded_extrinsic)."""
    info_llr, ext = bcjr_decode_batch(code, np.asarray(coded_llr, float)[None, :], info_len)
    return (info_llr[0] < 0).astype(np.int8), info_llr[0], ext[0]


def viterbi_decode_batch(code, coded_llr, info_len):
    """Max-metric (ML sequence) decisions on zero-tail frames; cross-check oracle."""
    tab = _code_tables(code.generators)
    mem, n_states = tab["memory"], tab["n_states"]
    steps = info_len + mem
    coded_llr = np.asarray(coded_llr, dtype=float)
    n_frames = coded_llr.shape[0]
    l1, l2 = coded_llr[:, 0::2], coded_llr[:, 1::2]
    pa, pb = tab["pred"]
    b_in = tab["b_in"]

    metric = np.full((n_frames, n_states), -np.inf)
    metric[:, 0] = 0.0
    choice = np.empty((steps, n_frames, n_states), dtype=bool)
    for t in range(steps):
        ga, gb = _branch_halves(tab, l1[:, t], l2[:, t], via_pred=True)
        ca = metric[:, pa] + ga
        cb = metric[:, pb] + gb
        take_b = cb > ca
        cand = np.where(take_b, cb, ca)
        if t >= info_len:
            cand[:, b_in == 1] = -np.inf
        choice[t] = take_b
        metric = cand - cand.max(axis=1, keepdims=True)

    bits = np.empty((n_frames, steps), dtype=np.int8)
    state = np.zeros(n_frames, dtype=np.intp)
    rows = np.arange(n_frames)
    for t in range(steps - 1, -1, -1):
        bits[:, t] = b_in[state]
        state = np.where(choice[t, rows, state], pb[state], pa[state])
    return bits[:, :info_len]


# ---------------------------------------------------------------------------
# frame mapping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrameConfig:
    constellation: object
    rotations: tuple
    code: ConvCode = ConvCode()
    info_len: int = 128
    iterations: int = 1
    fill: bool = True
    interleaver_seed: int | None = None  # None: derive from the simulation seed

    def __post_init__(self):
        object.__setattr__(self, "rotations", tuple(self.rotations))
        dims = {r.dim for r in self.rotations}
        if len(dims) != 1:
            raise ValueError("all rotations in a frame must share one dimension")
        if self.info_len < 1 or self.iterations < 1:
            raise ValueError("info_len and iterations must be >= 1")

    @property
    def rot_dim(self):
        return self.rotations[0].dim

    @property
    def blocks(self):
        return self.rot_dim * len(self.rotations)

    @property
    def bits_per_symbol(self):
        return self.constellation.bits_per_symbol

    @property
    def rate_bits_per_use(self):
        # nominal rate r * M; the zero tail is excluded by convention
        return self.code.rate * self.bits_per_symbol


@dataclass(frozen=True)
class FramePlan:
    stream_len: tuple  # coded data bits per stream
    fill: tuple  # known zero bits appended per stream
    uses: int  # channel uses L per frame


def frame_plan(cfg):
    n_coded = cfg.code.coded_len(cfg.info_len)
    n_streams = len(cfg.rotations)
    if n_streams == 2:
        lengths = [n_coded // 2, n_coded - n_coded // 2]
    else:
        lengths = [len(part) for part in np.array_split(np.arange(n_coded), n_streams)]
    per_use = cfg.bits_per_symbol * cfg.rot_dim
    uses = max(math.ceil(ln / per_use) for ln in lengths)
    fills = tuple(uses * per_use - ln for ln in lengths)
    if any(fills) and not cfg.fill:
        raise ValueError(
            f"{n_coded} coded bits do not fill an integer number of channel uses "
            f"({per_use} bits/use/stream over {n_streams} streams) and fill is disabled"
        )
    return FramePlan(tuple(lengths), fills, uses)


def frame_stream_maps(cfg, plan, rng, n_frames=1):
    """Interleaved coded-bit index per stream position, list of (n_frames, len_k).

    Entry [k][f, i] is the index into the coded sequence carried by stream k
    position i of frame f.  K = 2 uses the per-generator split with one
    permutation per stream; other K use one permutation of the whole sequence
    split contiguously.
    """
    n_coded = cfg.code.coded_len(cfg.info_len)
    if len(cfg.rotations) == 2:
        maps = []
        for k, ln in enumerate(plan.stream_len):
            base = np.arange(k, n_coded, 2)
            perm = rng.permuted(np.tile(np.arange(ln), (n_frames, 1)), axis=1)
            maps.append(base[perm])
        return maps
    global_perm = rng.permuted(np.tile(np.arange(n_coded), (n_frames, 1)), axis=1)
    bounds = np.cumsum((0,) + plan.stream_len)
    return [global_perm[:, bounds[k] : bounds[k + 1]] for k in range(len(plan.stream_len))]


def _map_frames(cfg, plan, coded, stream_maps):
    n_frames = coded.shape[0]
    m_bits, n_rot = cfg.bits_per_symbol, cfg.rot_dim
    uses = plan.uses
    powers = 1 << np.arange(m_bits - 1, -1, -1)
    pbl = cfg.constellation.points_by_label
    symbols = np.empty((n_frames, cfg.blocks, uses), dtype=complex)
    rotated = np.empty_like(symbols)
    for k, rot in enumerate(cfg.rotations):
        data = np.take_along_axis(coded, stream_maps[k], axis=1)
        stream = np.concatenate(
            [data, np.zeros((n_frames, plan.fill[k]), dtype=np.int8)], axis=1
        )
        labels = (stream.reshape(n_frames, uses * n_rot, m_bits) * powers).sum(axis=2)
        s_k = pbl[labels].reshape(n_frames, uses, n_rot)
        x_k = np.einsum("nm,flm->fln", rot.entries, s_k)
        rows = slice(k * n_rot, (k + 1) * n_rot)
        symbols[:, rows, :] = s_k.transpose(0, 2, 1)
        rotated[:, rows, :] = x_k.transpose(0, 2, 1)
    return symbols, rotated


def map_frame(cfg, coded_bits, stream_maps=None, interleaver_rng=None):
    """Map one frame's coded bits to the symbol matrix S and codeword X (B x L)."""
    plan = frame_plan(cfg)
    coded = np.asarray(coded_bits, dtype=np.int8)
    if coded.shape != (cfg.code.coded_len(cfg.info_len),):
        raise ValueError(
            f"expected {cfg.code.coded_len(cfg.info_len)} coded bits, got {coded.shape}"
        )
    if stream_maps is None:
        rng = interleaver_rng if interleaver_rng is not None else derive_rng(0)
        stream_maps = frame_stream_maps(cfg, plan, rng)
    symbols, rotated = _map_frames(cfg, plan, coded[None, :], stream_maps)
    return symbols[0], rotated[0]


# ---------------------------------------------------------------------------
# exhaustive APP demapper
# ---------------------------------------------------------------------------

DEMAP_CANDIDATE_CAP = 2**16


def _labeled_candidates(constellation, n_rot):
    """Candidate table in label order: index c encodes the MN-bit pattern."""
    m_bits = constellation.bits_per_symbol
    total = 2 ** (m_bits * n_rot)
    if total > DEMAP_CANDIDATE_CAP:
        raise ValueError(
            f"demapper needs {total} candidates for M={m_bits}, N={n_rot}, "
            f"above the cap {DEMAP_CANDIDATE_CAP}"
        )
    idx = np.arange(total)
    pbl = constellation.points_by_label
    syms = np.empty((total, n_rot), dtype=complex)
    for comp in range(n_rot):
        syms[:, comp] = pbl[(idx >> (m_bits * (n_rot - 1 - comp))) & (2**m_bits - 1)]
    shifts = m_bits * n_rot - 1 - np.arange(m_bits * n_rot)
    bits = ((idx[:, None] >> shifts[None, :]) & 1).astype(np.int8)
    return syms, (1.0 - 2.0 * bits), (bits == 0).T


def _demap_batch(y, h, rotation, constellation, snr, priors):
    """Extrinsic LLRs for batched channel uses.

    y: (F, L, N) received, h: (F, N) amplitudes, priors: (F, L, MN).
    The prior of bit j is excluded from its own marginalization (the sign
    column is zeroed), so extrinsic j is exactly independent of prior j.
    """
    syms, sgn, masks0 = _labeled_candidates(constellation, rotation.dim)
    scaled = np.sqrt(snr) * h[:, None, :] * (syms @ rotation.entries.T)[None, :, :]
    aa = np.sum(np.abs(scaled) ** 2, axis=-1)  # (F, C)
    cross = np.einsum("fln,fcn->flc", y, scaled.conj()).real
    metric = 2.0 * cross - aa[:, None, :]  # log-likelihood up to a y-only constant
    n_bits = priors.shape[-1]
    ext = np.empty(priors.shape)
    for j in range(n_bits):
        sgn_j = sgn.copy()
        sgn_j[:, j] = 0.0
        score = metric + 0.5 * np.einsum("flm,cm->flc", priors, sgn_j)
        ext[:, :, j] = logsumexp(score[:, :, masks0[j]], axis=-1) - logsumexp(
            score[:, :, ~masks0[j]], axis=-1
        )
    return np.clip(ext, -LLR_CLAMP, LLR_CLAMP)


def demap_app(y, h, rotation, constellation, snr, priors=None):
    """Extrinsic LLRs (length MN) for one received block vector y."""
    n_bits = constellation.bits_per_symbol * rotation.dim
    if priors is None:
        priors = np.zeros(n_bits)
    y = np.asarray(y, dtype=complex).reshape(1, 1, rotation.dim)
    h = np.asarray(h, dtype=float).reshape(1, rotation.dim)
    priors = np.asarray(priors, dtype=float).reshape(1, 1, n_bits)
    return _demap_batch(y, h, rotation, constellation, snr, priors)[0, 0]


def demap_posteriors(y, h, rotation, constellation, snr, priors=None):
    """Posterior probabilities over all candidate vectors (diagnostic)."""
    syms, sgn, _ = _labeled_candidates(constellation, rotation.dim)
    n_bits = constellation.bits_per_symbol * rotation.dim
    if priors is None:
        priors = np.zeros(n_bits)
    scaled = np.sqrt(snr) * np.asarray(h, float) * (syms @ rotation.entries.T)
    dist = np.sum(np.abs(np.asarray(y, complex)[None, :] - scaled) ** 2, axis=-1)
    score = -dist + 0.5 * sgn @ np.asarray(priors, float)
    score -= score.max()
    p = np.exp(score)
    return p / p.sum()


# ---------------------------------------------------------------------------
# frame-error-rate simulation
# ---------------------------------------------------------------------------


def _iterative_receive(cfg, plan, y, h, snr, stream_maps):
    n_frames = y.shape[0]
    n_rot = cfg.rot_dim
    uses, mn = plan.uses, cfg.bits_per_symbol * cfg.rot_dim
    priors = []
    for k in range(len(cfg.rotations)):
        pk = np.zeros((n_frames, uses * mn))
        pk[:, plan.stream_len[k] :] = LLR_CLAMP  # fill bits are known zeros
        priors.append(pk)
    coded_llr = np.empty((n_frames, cfg.code.coded_len(cfg.info_len)))
    info_llr = None
    for it in range(cfg.iterations):
        for k, rot in enumerate(cfg.rotations):
            rows = slice(k * n_rot, (k + 1) * n_rot)
            ext = _demap_batch(
                y[:, rows, :].transpose(0, 2, 1),
                h[:, rows],
                rot,
                cfg.constellation,
                snr,
                priors[k].reshape(n_frames, uses, mn),
            )
            flat = ext.reshape(n_frames, uses * mn)[:, : plan.stream_len[k]]
            np.put_along_axis(coded_llr, stream_maps[k], flat, axis=1)
        info_llr, coded_ext = bcjr_decode_batch(cfg.code, coded_llr, cfg.info_len)
        if it < cfg.iterations - 1:
            for k in range(len(cfg.rotations)):
                fed = np.take_along_axis(coded_ext, stream_maps[k], axis=1)
                priors[k][:, : plan.stream_len[k]] = fed
    return info_llr


def _fer_batch(cfg, plan, fading_m, snr, seed, point_key, batch_idx, n_frames):
    rng_bits = derive_rng(seed, point_key, batch_idx, 0)
    rng_gain = derive_rng(seed, point_key, batch_idx, 1)
    rng_noise = derive_rng(seed, point_key, batch_idx, 2)
    perm_seed = seed if cfg.interleaver_seed is None else cfg.interleaver_seed
    rng_perm = derive_rng(perm_seed, point_key, batch_idx, 3)
    info = rng_bits.integers(0, 2, size=(n_frames, cfg.info_len), dtype=np.int8)
    coded = conv_encode_batch(cfg.code, info)
    stream_maps = frame_stream_maps(cfg, plan, rng_perm, n_frames)
    _, x = _map_frames(cfg, plan, coded, stream_maps)
    gamma = sample_gamma(FadingSpec(cfg.blocks, fading_m), n_frames, rng_gain)
    h = np.sqrt(gamma)
    y = np.sqrt(snr) * h[:, :, None] * x + complex_noise(rng_noise, x.shape)
    info_llr = _iterative_receive(cfg, plan, y, h, snr, stream_maps)
    errs = (info_llr < 0).astype(np.int8) != info
    return int(errs.any(axis=1).sum()), int(errs.sum())


def simulate_fer(
    cfg,
    fading_m,
    snr_db_list,
    seed,
    min_errors=100,
    max_frames=100_000,
    batch_size=512,
    threads=1,
):
    """Frame/bit error rates over an SNR grid with a stop-at-min-errors rule.

    Frames are processed in fixed-size batches with counter-based seeding;
    results are independent of the worker count because batches are always
    consumed in index order up to the stopping batch.
    """
    plan = frame_plan(cfg)
    rate = cfg.rate_bits_per_use
    points = []
    for point_key, snr_db in enumerate(snr_db_list):
        snr = 10.0 ** (snr_db / 10.0)
        n_batches = math.ceil(max_frames / batch_size)
        frame_errors = bit_errors = frames = 0
        batch_idx = 0
        while batch_idx < n_batches:
            wave = range(batch_idx, min(batch_idx + max(threads, 1), n_batches))
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    results = list(
                        pool.map(
                            lambda i: _fer_batch(
                                cfg, plan, fading_m, snr, seed, point_key, i, batch_size
                            ),
                            wave,
                        )
                    )
            else:
                results = [
                    _fer_batch(cfg, plan, fading_m, snr, seed, point_key, i, batch_size)
                    for i in wave
                ]
            for fe, be in results:  # ordered consumption keeps the stop rule exact
                frame_errors += fe
                bit_errors += be
                frames += batch_size
                batch_idx += 1
                if frame_errors >= min_errors:
                    batch_idx = n_batches
                    break
        lo, hi = wilson_interval(frame_errors, frames)
        points.append(
            CurvePoint(
                snr_db=float(snr_db),
                ebn0_db=float(snr_db - 10.0 * math.log10(rate)),
                estimate=frame_errors / frames,
                ci_low=lo,
                ci_high=hi,
                trials=frames,
                extras={
                    "ber": bit_errors / (frames * cfg.info_len),
                    "frame_errors": frame_errors,
                    "bit_errors": bit_errors,
                    "iterations": cfg.iterations,
                },
            )
        )
    meta = {
        "model": f"coded/{cfg.constellation.name}/"
        + "+".join(r.name for r in cfg.rotations),
        "rate": rate,
        "blocks": cfg.blocks,
        "m": fading_m,
        "seed": seed,
        "info_len": cfg.info_len,
        "iterations": cfg.iterations,
    }
    return SimCurve(tuple(points), meta)
