"""Wall time of sparsifier construction as the sample count M grows."""

import argparse
import time

import numpy as np
from scipy.stats import linregress

from sparsemf.config import PipelineConfig
from sparsemf.sparsifier import build_sparsifier
from sparsemf.synthetic import random_sparse


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--avg-degree", type=float, default=10.0)
    ap.add_argument("-T", "--window", type=int, default=10)
    ap.add_argument("--samples", default="100000,200000,400000,800000")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    g = random_sparse(args.n, args.avg_degree, np.random.default_rng(args.seed), weighted=True)
    sizes = [int(x) for x in args.samples.split(",")]
    print(f"# graph n={g.n} m={g.m} T={args.window} threads={args.threads}")
    print("M\tmedian_seconds\tpairs")
    times = []
    for M in sizes:
        reps = []
        for rep in range(args.repeats):
            t0 = time.perf_counter()
            acc = build_sparsifier(g, PipelineConfig(window=args.window, samples=M, seed=rep, threads=args.threads))
            reps.append(time.perf_counter() - t0)
        times.append(float(np.median(reps)))
        print(f"{M}\t{times[-1]:.4f}\t{len(acc)}")
    fit = linregress(sizes, times)
    print(f"# slope {fit.slope * 1e6:.3f} s per 1e6 samples, R^2 {fit.rvalue ** 2:.4f}")


if __name__ == "__main__":
    main()
