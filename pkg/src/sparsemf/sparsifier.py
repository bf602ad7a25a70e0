"""Path-sampling sparsifier of the random-walk matrix polynomial.

Each of M samples picks an edge uniformly, a path length r uniformly in
``[1, T]``, grows a length-r path around the edge and adds edge
``(u_0, u_r)`` with weight ``2 r m / (M Z(p))`` to a new graph. The
Laplacian of that graph is an unbiased estimate of

    L = D - (1/T) sum_r D (D^-1 A)^r

and feeds the sparse NetMF-style matrix ``trunc_log(vol/b * D^-1 (D - L) D^-1)``.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .config import PipelineConfig
from .graph import Graph, _pick_slot, random_walk_with_cost, walk_batch
from .sparse import SparseMatrix

log = logging.getLogger(__name__)

# vertex pairs are packed as lo * n + hi into int64
MAX_VERTICES = 3_037_000_499
MAX_SAMPLES = 2**53


class AccumulatorCapacityError(MemoryError):
    pass


@dataclass(frozen=True)
class PathSample:
    u0: int
    ur: int
    z: float
    r: int
    path: tuple[int, ...] | None = field(default=None, compare=False)


def path_sampling(
    g: Graph, edge: tuple[int, int], r: int, rng: np.random.Generator, record_path: bool = False
) -> PathSample:
    """Sample a length-``r`` path containing ``edge`` at a uniform position."""
    u, v = int(edge[0]), int(edge[1])
    a_uv = g.weight(u, v)
    if a_uv <= 0:
        raise ValueError(f"({u}, {v}) is not an edge")
    if r < 1:
        raise ValueError("path length must be >= 1")
    k = int(rng.integers(1, r + 1))
    if not record_path:
        u0, zu = random_walk_with_cost(g, u, k - 1, rng)
        ur, zv = random_walk_with_cost(g, v, r - k, rng)
        return PathSample(u0, ur, 2.0 / a_uv + zu + zv, r)
    left, zu = _walk_path(g, u, k - 1, rng)
    right, zv = _walk_path(g, v, r - k, rng)
    path = tuple(left[::-1]) + tuple(right)
    return PathSample(path[0], path[-1], 2.0 / a_uv + zu + zv, r, path)


def _walk_path(g: Graph, start: int, steps: int, rng) -> tuple[list[int], float]:
    verts = [start]
    cost = 0.0
    for _ in range(steps):
        slot = _pick_slot(g, verts[-1], rng)
        cost += 2.0 / g.weights[slot]
        verts.append(int(g.indices[slot]))
    return verts, cost


def per_sample_weight(g: Graph, sample: PathSample, M: int) -> float:
    if sample.z <= 0:
        raise ValueError("path cost must be positive")
    return 2.0 * sample.r * g.m / (M * sample.z)


def sample_batch(
    g: Graph, size: int, window: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Draw ``size`` path samples at once; returns ``(u0, ur, z, r)`` arrays."""
    e = rng.integers(0, g.m, size=size)
    r = rng.integers(1, window + 1, size=size)
    k = rng.integers(1, r + 1)
    u0, zu = walk_batch(g, g.edge_u[e], k - 1, rng)
    ur, zv = walk_batch(g, g.edge_v[e], r - k, rng)
    z = 2.0 / g.edge_w[e] + zu + zv
    return u0, ur, z, r


@dataclass(eq=False)
class SparsifierAccumulator:
    """Unordered vertex pairs ``lo < hi`` with summed weights, sorted by pair."""

    n: int
    lo: np.ndarray
    hi: np.ndarray
    weights: np.ndarray
    dropped_self_loops: int = 0
    samples: int = 0

    @classmethod
    def empty(cls, n: int) -> "SparsifierAccumulator":
        e = np.zeros(0, dtype=np.int64)
        return cls(n, e, e.copy(), np.zeros(0))

    @classmethod
    def from_samples(cls, n: int, a, b, w) -> "SparsifierAccumulator":
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        w = np.asarray(w, dtype=np.float64)
        loop = a == b
        lo = np.minimum(a, b)[~loop]
        hi = np.maximum(a, b)[~loop]
        acc = cls._reduce(n, lo * n + hi, w[~loop])
        acc.dropped_self_loops = int(loop.sum())
        acc.samples = len(a)
        return acc

    @classmethod
    def _reduce(cls, n: int, keys: np.ndarray, w: np.ndarray) -> "SparsifierAccumulator":
        uniq, inv = np.unique(keys, return_inverse=True)
        summed = np.bincount(inv, weights=w, minlength=len(uniq))
        return cls(n, uniq // n, uniq % n, summed)

    def merge(self, other: "SparsifierAccumulator") -> "SparsifierAccumulator":
        if other.n != self.n:
            raise ValueError("cannot merge accumulators over different vertex sets")
        keys = np.concatenate([self.lo * self.n + self.hi, other.lo * other.n + other.hi])
        acc = self._reduce(self.n, keys, np.concatenate([self.weights, other.weights]))
        acc.dropped_self_loops = self.dropped_self_loops + other.dropped_self_loops
        acc.samples = self.samples + other.samples
        return acc

    def __len__(self) -> int:
        return len(self.weights)

    def total_weight(self) -> float:
        return math.fsum(self.weights)

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {(int(a), int(b)): float(w) for a, b, w in zip(self.lo, self.hi, self.weights)}


def _shard_sizes(M: int, shards: int) -> list[int]:
    base, extra = divmod(M, shards)
    return [base + (1 if i < extra else 0) for i in range(shards)]


def _run_shard(g: Graph, window: int, M: int, count: int, seq: np.random.SeedSequence, batch: int):
    rng = np.random.default_rng(seq)
    acc = SparsifierAccumulator.empty(g.n)
    done = 0
    while done < count:
        size = min(batch, count - done)
        u0, ur, z, r = sample_batch(g, size, window, rng)
        w = 2.0 * r * g.m / (M * z)
        acc = acc.merge(SparsifierAccumulator.from_samples(g.n, u0, ur, w))
        done += size
    return acc


def tree_merge(parts: list[SparsifierAccumulator]) -> SparsifierAccumulator:
    while len(parts) > 1:
        nxt = [parts[i].merge(parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def build_sparsifier(
    g: Graph, cfg: PipelineConfig, batch_size: int = 1 << 18
) -> SparsifierAccumulator:
    """Run all M path samples, split into ``cfg.threads`` seeded shards.

    Shard ``i`` draws from ``SeedSequence(cfg.seed, spawn_key=(i,))``, so the
    result is reproducible for a fixed ``(seed, threads)`` pair.
    """
    M = cfg.resolve_samples(g.m)
    if M > MAX_SAMPLES or g.n > MAX_VERTICES:
        raise AccumulatorCapacityError(f"M={M}, n={g.n} exceeds accumulator capacity")
    shards = cfg.threads
    seqs = [np.random.SeedSequence(cfg.seed, spawn_key=(i,)) for i in range(shards)]
    sizes = _shard_sizes(M, shards)
    log.info("sampling %d paths (T=%d) over %d shard(s)", M, cfg.window, shards)
    if shards == 1:
        parts = [_run_shard(g, cfg.window, M, sizes[0], seqs[0], batch_size)]
    else:
        with ThreadPoolExecutor(max_workers=shards) as pool:
            parts = list(
                pool.map(lambda i: _run_shard(g, cfg.window, M, sizes[i], seqs[i], batch_size), range(shards))
            )
    return tree_merge(parts)


def laplacian_of(acc: SparsifierAccumulator, n: int | None = None) -> SparseMatrix:
    """Unnormalized Laplacian ``D~ - A~`` of the accumulated graph."""
    n = acc.n if n is None else n
    if len(acc) and np.any(acc.weights <= 0):
        raise ValueError("accumulated weights must be positive")
    diag = np.bincount(acc.lo, weights=acc.weights, minlength=n) + np.bincount(
        acc.hi, weights=acc.weights, minlength=n
    )
    present = np.flatnonzero(diag)
    rows = np.concatenate([acc.lo, acc.hi, present])
    cols = np.concatenate([acc.hi, acc.lo, present])
    vals = np.concatenate([-acc.weights, -acc.weights, diag[present]])
    return SparseMatrix.from_triplets(n, rows, cols, vals)


def trunc_log(x):
    """``max(0, log x)``, with 0 for nonpositive input."""
    if np.isscalar(x):
        return math.log(x) if x > 1.0 else 0.0
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    big = x > 1.0
    out[big] = np.log(x[big])
    return out


def netmf_sparsifier(g: Graph, ltilde: SparseMatrix, b: float = 1.0) -> SparseMatrix:
    """``trunc_log(vol/b * D^-1 (D - L~) D^-1)`` over L~'s pattern plus the diagonal."""
    if ltilde.n != g.n:
        raise ValueError("dimension mismatch between graph and Laplacian")
    deg = g.degrees
    off = ltilde.rows != ltilde.cols
    r, c = ltilde.rows[off], ltilde.cols[off]
    off_vals = -ltilde.values[off] / (deg[r] * deg[c])
    diag_vals = (deg - ltilde.diagonal()) / (deg * deg)
    idx = np.arange(g.n, dtype=np.int64)
    rows = np.concatenate([r, idx])
    cols = np.concatenate([c, idx])
    vals = trunc_log((g.volume / b) * np.concatenate([off_vals, diag_vals]))
    keep = vals > 0
    order = np.lexsort((cols[keep], rows[keep]))
    return SparseMatrix(g.n, rows[keep][order], cols[keep][order], vals[keep][order])


def suggest_sample_count(T: int, m: int, n: int, epsilon: float) -> int:
    """Theoretical sample count ``ceil(T m eps^-2 ln n)``."""
    if not 0 < epsilon <= 0.5:
        raise ValueError("epsilon must lie in (0, 0.5]")
    if min(T, m, n) < 1:
        raise ValueError("T, m and n must be >= 1")
    return math.ceil(T * m * math.log(n) / epsilon**2)


def write_sparsifier(acc: SparsifierAccumulator, out: IO[str], **meta) -> None:
    """Dump as a JSON header line followed by ``u v weight`` triplets."""
    header = {"n": acc.n, "M": acc.samples, "dropped_self_loops": acc.dropped_self_loops}
    header.update(meta)
    out.write(json.dumps(header, sort_keys=True) + "\n")
    for a, b, w in zip(acc.lo, acc.hi, acc.weights):
        out.write(f"{a} {b} {float(w)!r}\n")


def read_sparsifier(src: IO[str]) -> tuple[SparsifierAccumulator, dict]:
    header = json.loads(src.readline())
    n = int(header["n"])
    data = np.loadtxt(src, ndmin=2) if n else np.zeros((0, 3))
    if data.size == 0:
        acc = SparsifierAccumulator.empty(n)
    else:
        lo = data[:, 0].astype(np.int64)
        hi = data[:, 1].astype(np.int64)
        if np.any(lo >= hi) or np.any(hi >= n) or np.any(data[:, 2] <= 0):
            raise ValueError("sparsifier triplets must satisfy 0 <= u < v < n with positive weight")
        acc = SparsifierAccumulator._reduce(n, lo * n + hi, data[:, 2])
    acc.dropped_self_loops = int(header.get("dropped_self_loops", 0))
    acc.samples = int(header.get("M", 0))
    return acc, header
