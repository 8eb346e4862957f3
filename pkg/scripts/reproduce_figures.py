#!/usr/bin/env python3
"""Run the figure recipes shipped in configs/fig*.cfg.

Each recipe file carries a [recipe] section whose `commands` value holds one
CLI invocation per line.  Outputs land in --outdir as <fig>_<k>.csv plus the
usual manifests.

    python scripts/reproduce_figures.py fig2 fig5
    python scripts/reproduce_figures.py --all --outdir outputs
"""

import argparse
import configparser
import shlex
import sys
from pathlib import Path

from rotfade.cli import run

ROOT = Path(__file__).resolve().parents[1]


def recipe_commands(fig):
    path = ROOT / "configs" / f"{fig}.cfg"
    parser = configparser.ConfigParser()
    parser.read_string(path.read_text())
    lines = [ln.strip() for ln in parser.get("recipe", "commands").splitlines()]
    return [ln for ln in lines if ln]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("figures", nargs="*", help="recipe names, e.g. fig2 fig5")
    ap.add_argument("--all", action="store_true", help="run every configs/fig*.cfg")
    ap.add_argument("--outdir", default="outputs")
    ap.add_argument("--dry-run", action="store_true", help="print commands only")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    figures = args.figures
    if args.all:
        figures = sorted(p.stem for p in (ROOT / "configs").glob("fig*.cfg"))
    if not figures:
        ap.error("give recipe names or --all")

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for fig in figures:
        for k, cmd in enumerate(recipe_commands(fig)):
            argv = shlex.split(cmd)
            argv += ["--out", str(outdir / f"{fig}_{k}.csv"), "--threads", str(args.threads)]
            print(f"$ rotfade {' '.join(argv)}")
            if args.dry_run:
                continue
            rc = run(argv)
            if rc != 0:
                print(f"command failed with exit code {rc}", file=sys.stderr)
                return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
