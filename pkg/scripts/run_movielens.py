#!/usr/bin/env python3
"""MovieLens benchmark wrapper: 5 seeded 80/20 splits, rank-100 fast greedy
with clipped insertion gradients and 2 capped inner iterations.

Expects the raw ratings file on disk (u.data for 100K, ratings.dat for 1M);
this repository does not download datasets.
"""

import argparse
import subprocess
import sys
from pathlib import Path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", required=True, help="path to u.data / ratings.dat")
    ap.add_argument("--format", choices=("ml100k", "ml1m"), default="ml100k")
    ap.add_argument("--outdir", default="results/movielens")
    ap.add_argument("--rank", type=int, default=100)
    ap.add_argument("--inner-iters", type=int, default=2)
    ap.add_argument("--splits", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cmd = [sys.executable, "-m", "lowrank", "recsys",
           "--data", args.data, "--format", args.format,
           "--split", "0.8", "--splits", str(args.splits),
           "--seed", str(args.seed), "--rank", str(args.rank),
           "--inner-iters", str(args.inner_iters), "--clip", "1:5",
           "--solver", "fast-greedy",
           "--csv", str(outdir / "rmse.csv"),
           "--json", str(outdir / "summary.json")]
    print("+", " ".join(cmd[2:]))
    subprocess.run(cmd, check=True)
    print(f"results in {outdir}/")


if __name__ == "__main__":
    main()
