from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .config import PipelineConfig
from .factorization import embed, randomized_svd
from .graph import Graph
from .sparse import SparseMatrix
from .sparsifier import SparsifierAccumulator, build_sparsifier, laplacian_of, netmf_sparsifier

log = logging.getLogger(__name__)


@dataclass
class EmbeddingResult:
    embedding: np.ndarray
    singular_values: np.ndarray
    accumulator: SparsifierAccumulator
    netmf: SparseMatrix
    timings: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)


def sparse_netmf(g: Graph, cfg: PipelineConfig, acc: SparsifierAccumulator | None = None, timings=None):
    """Steps 1 and 2: sampled Laplacian and its truncated-log transform."""
    timings = {} if timings is None else timings
    t0 = time.perf_counter()
    if acc is None:
        acc = build_sparsifier(g, cfg)
    t1 = time.perf_counter()
    ltilde = laplacian_of(acc, g.n)
    mat = netmf_sparsifier(g, ltilde, cfg.negative)
    t2 = time.perf_counter()
    timings.update(sampling=t1 - t0, transform=t2 - t1)
    counts = {
        "samples": int(acc.samples),
        "dropped_self_loops": int(acc.dropped_self_loops),
        "ltilde_offdiag_pairs": len(acc),
        "ltilde_nnz": ltilde.nnz,
        "netmf_nnz": mat.nnz,
    }
    return acc, mat, counts


def run_embedding(g: Graph, cfg: PipelineConfig, acc: SparsifierAccumulator | None = None, strict: bool = False):
    """Sparsify, transform, factorize; returns an ``EmbeddingResult``."""
    timings: dict[str, float] = {}
    acc, mat, counts = sparse_netmf(g, cfg, acc, timings)
    log.info("sparsifier: %d pairs, netmf nnz %d", counts["ltilde_offdiag_pairs"], counts["netmf_nnz"])
    t0 = time.perf_counter()
    u, s, _ = randomized_svd(mat, cfg.dim, seed=cfg.seed, threads=cfg.threads, strict=strict)
    emb = embed(u, s)
    timings["svd"] = time.perf_counter() - t0
    return EmbeddingResult(emb, s, acc, mat, timings, counts)
