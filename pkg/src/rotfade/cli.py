"""Command-line interface: exponent tables, MI/outage/FER sweeps, rotation checks.

Every run writes a CSV (header row, locale-independent formatting) and a JSON
manifest alongside it recording the subcommand, resolved configuration, seed,
version and timestamps, so results can be reproduced bit-exactly.
"""

import argparse
import configparser
import csv
import datetime
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .codedmod import ConvCode, FrameConfig, frame_plan, simulate_fer
from .constellation import make_qam
from .exponents import (
    ExponentQuery,
    optimal_exponent,
    random_coding_lower_bound,
    singleton_block_diversity,
    theorem_exponent,
)
from .mutual_info import gaussian_mi, scheme_mi
from .outage import DiscreteModel, GaussianModel, SimCurve, fit_slope, outage_sweep
from .rotation import (
    FULL_DIVERSITY_TOL,
    catalog,
    catalog_names,
    full_diversity_margin,
    unitarity_residual,
)
from .seeding import derive_rng


def _parse_grid(text):
    """Grid spec: either 'a,b,c' or 'start:stop:step' (stop inclusive)."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        n = int(round((stop - start) / step))
        return [start + i * step for i in range(n + 1)]
    return [float(x) for x in text.split(",")]


def _parse_floats(text):
    return [float(x) for x in text.replace(",", " ").split()]


def _constellation(name, labeling="gray"):
    name = name.strip().lower()
    kind = {"gray": "gray", "sp": "set_partitioning", "set_partitioning": "set_partitioning"}[
        labeling.strip().lower()
    ]
    if name == "qpsk":
        return make_qam(2, kind)
    if name in ("qam16", "16qam"):
        return make_qam(4, kind)
    raise ValueError(f"unknown constellation {name!r} (qpsk or qam16)")


def _rotations(text):
    return tuple(catalog(n) for n in text.split(",") if n.strip())


def _write_outputs(out_path, header, rows, manifest):
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    manifest["output"] = str(out_path)
    manifest["rows"] = len(rows)
    manifest["finished_utc"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    manifest_path = out_path.with_suffix(".manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)
    return manifest_path


def _manifest(subcommand, config, seed=None):
    return {
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "version": __version__,
        "started_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def _read_config(path):
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    return parser


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_exponents(args):
    m = args.m
    if args.rate_ratio is not None:
        ratios = [Fraction(args.rate_ratio)]
    else:
        ratios = [Fraction(i, args.steps) for i in range(args.steps + 1)]
    header = [
        "rate_ratio",
        "blocks",
        "rot_dim",
        "m",
        "singleton_block_diversity",
        "upper_bound",
        "boundary",
        "theorem_value",
        "lower_limit",
        "optimal_exponent",
    ]
    if args.lam is not None:
        header.append("rc_lower_bound")
    rows = []
    for ratio in ratios:
        q = ExponentQuery(args.blocks, args.rot_dim, m, ratio, args.bits_per_symbol, args.lam)
        th = theorem_exponent(q)
        row = [
            f"{ratio.numerator}/{ratio.denominator}",
            args.blocks,
            args.rot_dim,
            m,
            singleton_block_diversity(args.blocks, args.rot_dim, ratio, 1),
            th.upper,
            int(th.boundary),
            "" if th.value is None else th.value,
            th.lower_limit,
            optimal_exponent(m, args.blocks),
        ]
        if args.lam is not None:
            row.append(random_coding_lower_bound(q))
        rows.append(row)
    config = {
        "blocks": args.blocks,
        "rot_dim": args.rot_dim,
        "m": m,
        "rate_ratio": str(args.rate_ratio),
        "lambda": args.lam,
        "bits_per_symbol": args.bits_per_symbol,
        "steps": args.steps,
    }
    _write_outputs(args.out, header, rows, _manifest("exponents", config, args.seed))
    for row in rows[: 12 if args.rate_ratio is None else 1]:
        print(" ".join(f"{h}={v}" for h, v in zip(header, row)))
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _mi_schemes_from_args(args, parser_cfg):
    """Collect (name, spec-dict) scheme list from config sections and/or flags."""
    schemes = []
    if parser_cfg is not None:
        for section in parser_cfg.sections():
            if not section.startswith("scheme"):
                continue
            sec = parser_cfg[section]
            name = section.split(".", 1)[1] if "." in section else section
            schemes.append((name, dict(sec)))
    if not schemes:
        spec = {"kind": args.scheme}
        if args.scheme == "discrete":
            spec.update(
                constellation=args.constellation,
                labeling=args.labeling,
                rotations=args.rotations,
                method=args.method,
                samples=str(args.samples),
            )
        schemes.append((args.scheme, spec))
    return schemes


def _cmd_mi_sweep(args):
    parser_cfg = _read_config(args.config) if args.config else None
    gamma = None
    if parser_cfg is not None and parser_cfg.has_section("channel"):
        sec = parser_cfg["channel"]
        if "gamma" in sec:
            gamma = np.array(_parse_floats(sec["gamma"]))
        elif "h" in sec:
            gamma = np.array(_parse_floats(sec["h"])) ** 2
    if args.gamma:
        gamma = np.array(_parse_floats(args.gamma))
    if args.h:
        gamma = np.array(_parse_floats(args.h)) ** 2
    if gamma is None:
        raise ValueError("mi-sweep needs a fixed channel: pass --gamma/--h or a config [channel]")
    snr_grid = None
    if parser_cfg is not None and parser_cfg.has_option("sweep", "snr_db"):
        snr_grid = parser_cfg.get("sweep", "snr_db")
    if args.snr_db is not None:  # flags override the config file
        snr_grid = args.snr_db
    if snr_grid is None:
        raise ValueError("mi-sweep needs an SNR grid (--snr-db or config [sweep] snr_db)")
    snrs = _parse_grid(snr_grid)

    schemes = _mi_schemes_from_args(args, parser_cfg)
    header = ["snr_db", "scheme", "value_bits", "std_error", "method"]
    rows = []
    for idx, (name, spec) in enumerate(schemes):
        kind = spec.get("kind", "discrete")
        for snr_db in snrs:
            snr = 10.0 ** (snr_db / 10.0)
            if kind == "gaussian":
                est = gaussian_mi(snr, gamma)
            elif kind == "discrete":
                cons = _constellation(
                    spec.get("constellation", "qpsk"), spec.get("labeling", "gray")
                )
                rots = _rotations(spec["rotations"])
                est = scheme_mi(
                    cons,
                    rots,
                    gamma,
                    snr,
                    method=spec.get("method", "auto"),
                    n_samples=int(spec.get("samples", 2000)),
                    quad_points=int(spec.get("quad_points", 16)),
                    rng=derive_rng(args.seed, idx),  # common random numbers per point
                )
            else:
                raise ValueError(f"unknown scheme kind {kind!r}")
            rows.append([snr_db, name, est.value, est.std_error, est.method])
    config = {
        "gamma": gamma.tolist(),
        "snr_db": snrs,
        "schemes": [dict(s[1]) | {"name": s[0]} for s in schemes],
        "seed": args.seed,
    }
    _write_outputs(args.out, header, rows, _manifest("mi-sweep", config, args.seed))
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_outage_sweep(args):
    if args.model == "gaussian":
        model = GaussianModel(args.blocks, args.m)
    else:
        cons = _constellation(args.constellation, args.labeling)
        rots = _rotations(args.rotations)
        model = DiscreteModel(cons, rots, args.m)
        if model.blocks != args.blocks:
            raise ValueError(
                f"rotations span {model.blocks} blocks but --B is {args.blocks}"
            )
    snrs = _parse_grid(args.snr_db)
    curve = outage_sweep(
        model,
        args.rate,
        snrs,
        args.trials,
        args.seed,
        threads=args.threads,
        mc_samples=args.mc_samples,
        mc_cap=args.mc_cap,
    )
    header = ["snr_db", "ebn0_db", "p_out", "ci_low", "ci_high", "trials", "model"]
    rows = [
        [p.snr_db, p.ebn0_db, p.estimate, p.ci_low, p.ci_high, p.trials, model.name]
        for p in curve.points
    ]
    config = {
        "model": model.name,
        "blocks": args.blocks,
        "m": args.m,
        "rate": args.rate,
        "snr_db": snrs,
        "trials": args.trials,
        "seed": args.seed,
        "mc_samples": args.mc_samples,
        "mc_cap": args.mc_cap,
    }
    _write_outputs(args.out, header, rows, _manifest("outage-sweep", config, args.seed))
    flagged = [p.snr_db for p in curve.points if p.extras.get("threshold_flag")]
    if flagged:
        print(f"warning: threshold-ambiguity flag raised at snr_db={flagged}", file=sys.stderr)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


_FER_DEFAULTS = {
    "code": {"info_len": "128", "generators": "5,7"},
    "modulation": {"constellation": "qpsk", "labeling": "gray"},
    "rotation": {"rotations": "cyclotomic2,cyclotomic2"},
    "channel": {"m": "1.0"},
    "sim": {
        "ebn0_db": "6,8,10,12",
        "iterations": "2",
        "min_errors": "100",
        "max_frames": "100000",
        "batch_size": "512",
        "seed": "1",
    },
}


def _resolve_fer_config(args):
    cfg = {sec: dict(vals) for sec, vals in _FER_DEFAULTS.items()}
    if args.config:
        parsed = _read_config(args.config)
        for sec in parsed.sections():
            if sec == "recipe":  # figure-recipe metadata, not simulation config
                continue
            if sec not in cfg:
                raise ValueError(f"unknown config section [{sec}]")
            for key, val in parsed[sec].items():
                if key not in cfg[sec]:
                    raise ValueError(f"unknown config key {key!r} in [{sec}]")
                cfg[sec][key] = val
    overrides = {
        ("code", "info_len"): args.info_len,
        ("modulation", "constellation"): args.constellation,
        ("modulation", "labeling"): args.labeling,
        ("rotation", "rotations"): args.rotations,
        ("channel", "m"): args.m,
        ("sim", "ebn0_db"): args.ebn0_db,
        ("sim", "iterations"): args.iterations,
        ("sim", "min_errors"): args.min_errors,
        ("sim", "max_frames"): args.max_frames,
        ("sim", "seed"): args.seed_override,
    }
    for (sec, key), val in overrides.items():
        if val is not None:
            cfg[sec][key] = str(val)
    return cfg


def _cmd_fer_sim(args):
    cfg = _resolve_fer_config(args)
    if args.dump_config:
        for sec, vals in cfg.items():
            print(f"[{sec}]")
            for key, val in vals.items():
                print(f"{key} = {val}")
            print()
        return 0
    gens = tuple(int(g, 8) for g in cfg["code"]["generators"].split(","))
    frame = FrameConfig(
        constellation=_constellation(
            cfg["modulation"]["constellation"], cfg["modulation"]["labeling"]
        ),
        rotations=_rotations(cfg["rotation"]["rotations"]),
        code=ConvCode(gens),
        info_len=int(cfg["code"]["info_len"]),
        iterations=int(cfg["sim"]["iterations"]),
    )
    frame_plan(frame)  # validate the layout before burning time
    rate = frame.rate_bits_per_use
    ebn0 = _parse_grid(cfg["sim"]["ebn0_db"])
    snr_db = [e + 10.0 * math.log10(rate) for e in ebn0]
    curve = simulate_fer(
        frame,
        float(cfg["channel"]["m"]),
        snr_db,
        int(cfg["sim"]["seed"]),
        min_errors=int(cfg["sim"]["min_errors"]),
        max_frames=int(cfg["sim"]["max_frames"]),
        batch_size=int(cfg["sim"]["batch_size"]),
        threads=args.threads,
    )
    header = ["ebn0_db", "fer", "ber", "ci_low", "ci_high", "frames", "iterations"]
    rows = [
        [
            p.ebn0_db,
            p.estimate,
            p.extras["ber"],
            p.ci_low,
            p.ci_high,
            p.trials,
            p.extras["iterations"],
        ]
        for p in curve.points
    ]
    _write_outputs(args.out, header, rows, _manifest("fer-sim", cfg, int(cfg["sim"]["seed"])))
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_check_rotation(args):
    rot = catalog(args.rotation)
    cons = _constellation(args.constellation, args.labeling)
    residual = unitarity_residual(rot)
    margin = full_diversity_margin(rot, cons, cap=args.cap)
    full = margin > FULL_DIVERSITY_TOL
    col_norms = np.sum(rot.entries**2, axis=0)
    print(f"rotation {rot.name} (dim {rot.dim}) on {cons.name}")
    print(f"  unitarity residual ||MM^T - I||_F = {residual:.3e}")
    print(f"  column squared norms = {np.array2string(col_norms, precision=10)}")
    if not rot.claims_unitary:
        print("  note: matrix stored verbatim, does not claim unitarity")
    print(f"  full-diversity margin = {margin:.6e}")
    print(f"  {'PASS' if full else 'FAIL'}: "
          f"{'full diversity' if full else 'not full diversity (zero or tiny margin)'}")
    header = [
        "rotation",
        "constellation",
        "dim",
        "claims_unitary",
        "unitarity_residual",
        "margin",
        "full_diversity",
    ]
    rows = [[rot.name, cons.name, rot.dim, int(rot.claims_unitary), residual, margin, int(full)]]
    config = {"rotation": args.rotation, "constellation": args.constellation, "cap": args.cap}
    _write_outputs(args.out, header, rows, _manifest("check-rotation", config))
    return 0


def _cmd_slope(args):
    from .outage import CurvePoint  # local import: only needed here

    with open(args.input, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise ValueError(f"no data rows in {args.input}")
    points = []
    for row in sorted(rows, key=lambda r: float(r[args.x_column])):
        est = float(row[args.p_column])
        lo = float(row[args.lo_column]) if args.lo_column in row else est
        hi = float(row[args.hi_column]) if args.hi_column in row else est
        points.append(
            CurvePoint(
                snr_db=float(row[args.x_column]),
                ebn0_db=float(row.get("ebn0_db", row[args.x_column])),
                estimate=est,
                ci_low=lo,
                ci_high=hi,
                trials=int(float(row.get("trials", 0))),
            )
        )
    curve = SimCurve(tuple(points), {"source": args.input})
    slope = fit_slope(curve, (args.pmin, args.pmax))
    print(f"fitted diversity slope: {slope:.6f}")
    header = ["slope", "pmin", "pmax", "input"]
    rows_out = [[slope, args.pmin, args.pmax, args.input]]
    config = {"input": args.input, "pmin": args.pmin, "pmax": args.pmax}
    _write_outputs(args.out, header, rows_out, _manifest("slope", config))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rotfade",
        description="Diversity exponents and Monte Carlo validation for rotated "
        "coded modulation over Nakagami-m block-fading channels",
    )
    parser.add_argument("--version", action="version", version=f"rotfade {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, default_out):
        p.add_argument("--seed", type=int, default=1, help="master seed (64-bit)")
        p.add_argument("--out", default=default_out, help="output CSV path")
        p.add_argument("--threads", type=int, default=1, help="worker cap")

    p = sub.add_parser("exponents", help="closed-form exponent staircases")
    common(p, "exponents.csv")
    p.add_argument("--B", dest="blocks", type=int, required=True)
    p.add_argument("--N", dest="rot_dim", type=int, required=True)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--rate-ratio", dest="rate_ratio", default=None, help="R/M as p/q")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="length growth ratio for the random-coding lower bound")
    p.add_argument("--M", dest="bits_per_symbol", type=int, default=2)
    p.add_argument("--steps", type=int, default=100, help="R/M sweep resolution")
    p.set_defaults(func=_cmd_exponents)

    p = sub.add_parser("mi-sweep", help="instantaneous MI vs SNR for a fixed channel")
    common(p, "mi_sweep.csv")
    p.add_argument("--config", default=None, help="config file with [channel]/[scheme.*]")
    p.add_argument("--snr-db", dest="snr_db", default=None, help="grid 'a,b,c' or 'start:stop:step'")
    p.add_argument("--gamma", default=None, help="fixed per-block power gains")
    p.add_argument("--h", default=None, help="fixed per-block amplitudes")
    p.add_argument("--scheme", choices=["gaussian", "discrete"], default="gaussian")
    p.add_argument("--constellation", default="qpsk")
    p.add_argument("--labeling", default="gray")
    p.add_argument("--rotations", default="identity1,identity1,identity1,identity1")
    p.add_argument("--method", default="auto")
    p.add_argument("--samples", type=int, default=2000)
    p.set_defaults(func=_cmd_mi_sweep)

    p = sub.add_parser("outage-sweep", help="Monte Carlo outage probability vs SNR")
    common(p, "outage.csv")
    p.add_argument("--model", choices=["gaussian", "discrete"], required=True)
    p.add_argument("--B", dest="blocks", type=int, required=True)
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--rate", type=float, required=True, help="R in bits per channel use")
    p.add_argument("--snr-db", dest="snr_db", required=True)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--constellation", default="qpsk")
    p.add_argument("--labeling", default="gray")
    p.add_argument("--rotations", default="identity1,identity1,identity1,identity1")
    p.add_argument("--mc-samples", dest="mc_samples", type=int, default=64)
    p.add_argument("--mc-cap", dest="mc_cap", type=int, default=4096)
    p.set_defaults(func=_cmd_outage_sweep)

    p = sub.add_parser("fer-sim", help="coded-modulation frame error rate simulation")
    common(p, "fer.csv")
    p.add_argument("--config", default=None, help="config file (see --dump-config)")
    p.add_argument("--dump-config", action="store_true", help="print resolved config and exit")
    p.add_argument("--info-len", dest="info_len", type=int, default=None)
    p.add_argument("--constellation", default=None)
    p.add_argument("--labeling", default=None)
    p.add_argument("--rotations", default=None)
    p.add_argument("--m", type=float, default=None)
    p.add_argument("--ebn0-db", dest="ebn0_db", default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--min-errors", dest="min_errors", type=int, default=None)
    p.add_argument("--max-frames", dest="max_frames", type=int, default=None)
    p.add_argument("--seed-override", dest="seed_override", type=int, default=None,
                   help="overrides [sim] seed from the config file")
    p.set_defaults(func=_cmd_fer_sim)

    p = sub.add_parser("check-rotation", help="unitarity and full-diversity check")
    common(p, "check_rotation.csv")
    p.add_argument("--rotation", required=True, help=f"one of {', '.join(catalog_names())}")
    p.add_argument("--constellation", required=True)
    p.add_argument("--labeling", default="gray")
    p.add_argument("--cap", type=int, default=10**8)
    p.set_defaults(func=_cmd_check_rotation)

    p = sub.add_parser("slope", help="fit a diversity slope to a simulated curve")
    common(p, "slope.csv")
    p.add_argument("--input", required=True)
    p.add_argument("--pmin", type=float, required=True)
    p.add_argument("--pmax", type=float, required=True)
    p.add_argument("--x-column", dest="x_column", default="snr_db")
    p.add_argument("--p-column", dest="p_column", default="p_out")
    p.add_argument("--lo-column", dest="lo_column", default="ci_low")
    p.add_argument("--hi-column", dest="hi_column", default="ci_high")
    p.set_defaults(func=_cmd_slope)
    return parser


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand == "outage-sweep" and args.trials is None:
        args.trials = 10_000_000 if args.model == "gaussian" else 30_000
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
