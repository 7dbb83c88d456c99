#!/usr/bin/env python3
"""Plot the CSV files written by pint-bench.

usage: plot_results.py OUT_DIR [OUT_DIR ...] [--save FILE]

Each OUT_DIR is an output directory of run-mgrit or compare. Residual
histories go in the left panel, modelled speedup in the right one.
Needs matplotlib.
"""
import argparse
import csv
from pathlib import Path

import matplotlib.pyplot as plt


def read(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("dirs", nargs="+", type=Path)
    ap.add_argument("--save", type=Path)
    args = ap.parse_args()

    fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4))
    for d in args.dirs:
        conv = d / "convergence.csv"
        if conv.exists():
            rows = read(conv)
            left.semilogy([int(r["iteration"]) for r in rows], [float(r["residual_norm"]) for r in rows], "o-", label=d.name)
        work = d / "work_model.csv"
        if work.exists():
            rows = read(work)
            right.semilogx([int(r["workers"]) for r in rows], [float(r["estimated_speedup"]) for r in rows], "s-", label=d.name)
    left.set_xlabel("iteration")
    left.set_ylabel("residual norm")
    right.axhline(1.0, color="grey", lw=0.8)
    right.set_xlabel("workers")
    right.set_ylabel("modelled speedup")
    for ax in (left, right):
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
