"""Small synthetic graphs for tests and experiments."""

from __future__ import annotations

import numpy as np

from .graph import Graph


def triangle(weights=(1.0, 1.0, 1.0)) -> Graph:
    """Edges (0,1), (1,2), (2,0) with the given weights."""
    return Graph.from_edges(3, [0, 1, 2], [1, 2, 0], list(weights))


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, np.arange(n - 1), np.arange(1, n))


def random_connected(
    n: int, p: float, rng: np.random.Generator, weighted: bool = False, wmin: float = 1.0, wmax: float = 5.0
) -> Graph:
    """Erdos-Renyi G(n, p) plus a random spanning tree, so it is always connected."""
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    perm = rng.permutation(n)
    parents = perm[(rng.random(n - 1) * np.arange(1, n)).astype(np.int64)]
    u = np.concatenate([iu[keep], perm[1:]])
    v = np.concatenate([ju[keep], parents])
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    key = np.unique(lo * n + hi)
    lo, hi = key // n, key % n
    w = rng.uniform(wmin, wmax, size=len(key)) if weighted else None
    return Graph.from_edges(n, lo, hi, w, weighted=weighted)


def random_sparse(n: int, avg_degree: float, rng: np.random.Generator, weighted: bool = False) -> Graph:
    """Connected sparse random graph without forming the dense pair list."""
    extra = int(n * avg_degree / 2)
    perm = rng.permutation(n)
    parents = perm[(rng.random(n - 1) * np.arange(1, n)).astype(np.int64)]
    a = rng.integers(0, n, size=extra)
    b = rng.integers(0, n, size=extra)
    ok = a != b
    u = np.concatenate([perm[1:], a[ok]])
    v = np.concatenate([parents, b[ok]])
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    key = np.unique(lo * n + hi)
    w = rng.uniform(1.0, 5.0, size=len(key)) if weighted else None
    return Graph.from_edges(n, key // n, key % n, w, weighted=weighted)


def two_block_sbm(
    n: int, p_in: float, p_out: float, rng: np.random.Generator
) -> tuple[Graph, np.ndarray]:
    """Two-community stochastic block model; returns the graph and block labels.

    Each block also gets a spanning path so that no vertex is isolated and
    the graph stays connected.
    """
    block = np.arange(n) % 2
    iu, ju = np.triu_indices(n, 1)
    prob = np.where(block[iu] == block[ju], p_in, p_out)
    keep = rng.random(len(iu)) < prob
    chain_u, chain_v = [], []
    for c in (0, 1):
        members = rng.permutation(np.flatnonzero(block == c))
        chain_u.append(members[:-1])
        chain_v.append(members[1:])
    u = np.concatenate([iu[keep], *chain_u, [0]])
    v = np.concatenate([ju[keep], *chain_v, [1]])
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    key = np.unique(lo * n + hi)
    return Graph.from_edges(n, key // n, key % n), block
