#!/usr/bin/env python3
"""Plot CSVs produced by the rotfade CLI (optional; the core tool never plots).

    python scripts/plot_curves.py outputs/fig5_*.csv --ylog --x ebn0_db --y p_out
    python scripts/plot_curves.py outputs/fig2_0.csv --x snr_db --y value_bits --group scheme
"""

import argparse
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csvs", nargs="+")
    ap.add_argument("--x", default="snr_db")
    ap.add_argument("--y", default="p_out")
    ap.add_argument("--group", default=None, help="column that splits one file into curves")
    ap.add_argument("--ylog", action="store_true")
    ap.add_argument("--out", default="curves.png")
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for path in args.csvs:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        series = defaultdict(list)
        for row in rows:
            key = row[args.group] if args.group else Path(path).stem
            series[key].append((float(row[args.x]), float(row[args.y])))
        for key, pts in series.items():
            pts.sort()
            xs, ys = zip(*pts)
            ax.plot(xs, ys, marker="o", markersize=3, label=key)
    if args.ylog:
        ax.set_yscale("log")
    ax.set_xlabel(args.x)
    ax.set_ylabel(args.y)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"saved {args.out}")


if __name__ == "__main__":
    main()
