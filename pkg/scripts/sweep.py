"""Disturbance sweep over the 100-point grid for the four strategies and
the all-SM benchmark; prints the median normalized nadir and RoCoF.

    python scripts/sweep.py --out results/sweep
"""
import argparse
from pathlib import Path

import numpy as np

from gridforge.cli import sweep_csv
from gridforge.scenarios import VARIANTS, preset, sweep_disturbances, sweep_grid


def main() -> None:
    ap = argparse.ArgumentParser(description="disturbance sweep")
    ap.add_argument("--variants", nargs="+", default=list(VARIANTS))
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", type=Path, default=Path("results/sweep"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    grid = sweep_grid(count=args.count)
    print(f"{'variant':9s} {'nadir/dp':>10s} {'rocof/dp':>10s} {'errors':>7s}")
    for v in args.variants:
        entries = sweep_disturbances(preset("sweep-9bus").variant(v), grid, args.workers)
        (args.out / f"sweep_{v}.csv").write_text(sweep_csv(entries))
        good = [e.report for e in entries if not e.error]
        n = np.median([r.nadir_norm for r in good]) if good else float("nan")
        r = np.median([r.rocof_norm for r in good]) if good else float("nan")
        print(f"{v:9s} {n:10.4f} {r:10.4f} {len(entries) - len(good):7d}")


if __name__ == "__main__":
    main()
