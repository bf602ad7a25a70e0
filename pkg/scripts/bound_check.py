"""Measured epsilon and both error-bound margins as M grows on a small random graph."""

import argparse

import numpy as np

from sparsemf.config import PipelineConfig
from sparsemf.oracle import (
    check_frobenius_bound,
    check_singular_bound,
    exact_L,
    exact_M,
    m_from_laplacian,
    measure_epsilon,
    uniform_alpha,
)
from sparsemf.sparsifier import build_sparsifier, laplacian_of, suggest_sample_count
from sparsemf.synthetic import random_connected


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=40)
    ap.add_argument("--p", type=float, default=0.15)
    ap.add_argument("-T", "--window", type=int, default=3)
    ap.add_argument("--samples", default="1000,10000,100000,1000000")
    ap.add_argument("--weighted", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    g = random_connected(args.n, args.p, np.random.default_rng(args.seed), weighted=args.weighted)
    T = args.window
    lap, m = exact_L(g, uniform_alpha(T)), exact_M(g, T)
    print(f"# graph n={g.n} m={g.m} T={T}; samples suggested for eps=0.1: {suggest_sample_count(T, g.m, g.n, 0.1)}")
    print("M\tpairs\tepsilon\tsingular_margin\tfrobenius_lhs\tfrobenius_bound")
    for M in (int(x) for x in args.samples.split(",")):
        acc = build_sparsifier(g, PipelineConfig(window=T, samples=M, seed=args.seed))
        lt = laplacian_of(acc).todense()
        try:
            eps = measure_epsilon(lt, lap)
        except ValueError:
            eps = float("inf")
        if eps < 0.5:
            sing = check_singular_bound(m_from_laplacian(g, lt), m, eps, g)
            frob = check_frobenius_bound(g, lt, lap, eps)
            print(f"{M}\t{len(acc)}\t{eps:.4g}\t{sing.worst_margin:.3e}\t{frob.lhs:.3e}\t{frob.bound:.3e}")
        else:
            print(f"{M}\t{len(acc)}\t{eps:.4g}\tout of regime\t-\t-")


if __name__ == "__main__":
    main()
