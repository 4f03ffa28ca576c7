"""Run the simulated bigram-discovery benchmark and print mean F per method and size.

    python scripts/benchmark.py --out grid.csv --jobs 4
"""

import argparse
from collections import defaultdict

import numpy as np

from turbo_topics.discovery import METHODS
from turbo_topics.simulation import BenchConfig, aggregate, grid_csv, run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="1000,10000")
    ap.add_argument("--replications", type=int, default=5)
    ap.add_argument("--permutations", type=int, default=1000)
    ap.add_argument("--min-count", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", help="per-cell grid as CSV")
    args = ap.parse_args()

    cfg = BenchConfig(sizes=tuple(int(s) for s in args.sizes.split(",")), replications=args.replications,
                      M=args.permutations, min_count=args.min_count, seed=args.seed)
    rows = run_benchmark(cfg, jobs=args.jobs)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(grid_csv(rows))

    f = defaultdict(list)
    for r in rows:
        f[r["method"], r["size"]].append(r["f"])
    print(f"{'method':<24}" + "".join(f"{'n=' + str(s):>10}" for s in cfg.sizes))
    for m in METHODS:
        print(f"{m:<24}" + "".join(f"{np.mean(f[m, s]):>10.3f}" for s in cfg.sizes))
    print()
    for a in aggregate(rows):
        print(f"{a['method']:<24}{a['size']:>7}{a['threshold']:>7}  "
              f"P={a['precision']:.3f} R={a['recall']:.3f} F={a['f']:.3f}")


if __name__ == "__main__":
    main()
