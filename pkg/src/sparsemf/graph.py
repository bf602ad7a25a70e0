"""Undirected weighted graphs in compressed adjacency form.

Vertices are dense integer ids in ``[0, n)``. Each undirected edge is kept
once in ``edge_u``/``edge_v``/``edge_w`` (with ``u < v``) for uniform edge
picks, and twice in the CSR adjacency for neighbor sampling.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np


class GraphFormatError(ValueError):
    """Raised when an edge list cannot be turned into a valid graph."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    m: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    degrees: np.ndarray
    volume: float
    # per-row running sums of ``weights``; restart at every row
    prefix: np.ndarray
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_w: np.ndarray
    weighted: bool = False
    uniform: bool = field(default=True)

    @classmethod
    def from_edges(cls, n: int, u, v, w=None, weighted: bool | None = None) -> "Graph":
        """Build a graph from an edge array; duplicates are summed.

        ``u``/``v`` may list each edge in either orientation. Self-loops,
        non-positive weights and isolated vertices are rejected.
        """
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        if w is None:
            w = np.ones(len(u), dtype=np.float64)
        w = np.asarray(w, dtype=np.float64)
        if not (len(u) == len(v) == len(w)):
            raise ValueError("edge arrays differ in length")
        if weighted is None:
            weighted = bool(np.any(w != 1.0))
        if n <= 0:
            raise GraphFormatError("graph has no vertices")
        if len(u) and (u.min() < 0 or v.min() < 0 or u.max() >= n or v.max() >= n):
            raise GraphFormatError("vertex id out of range")
        if np.any(u == v):
            raise GraphFormatError("self-loop in input")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise GraphFormatError("edge weights must be positive and finite")

        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        key = lo * n + hi
        uniq, inv = np.unique(key, return_inverse=True)
        ew = np.bincount(inv, weights=w, minlength=len(uniq))
        eu = uniq // n
        ev = uniq % n

        rows = np.concatenate([eu, ev])
        cols = np.concatenate([ev, eu])
        vals = np.concatenate([ew, ew])
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        counts = np.bincount(rows, minlength=n)
        isolated = np.flatnonzero(counts == 0)
        if len(isolated):
            raise GraphFormatError(
                f"{len(isolated)} isolated vertices (first: {int(isolated[0])})"
            )
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        degrees = np.add.reduceat(vals, indptr[:-1])
        prefix = np.empty_like(vals)
        for i in range(n):
            np.cumsum(vals[indptr[i]:indptr[i + 1]], out=prefix[indptr[i]:indptr[i + 1]])

        return cls(
            n=int(n),
            m=int(len(uniq)),
            indptr=indptr,
            indices=cols,
            weights=vals,
            degrees=degrees,
            volume=float(degrees.sum()),
            prefix=prefix,
            edge_u=eu,
            edge_v=ev,
            edge_w=ew,
            weighted=bool(weighted),
            uniform=bool(np.all(ew == ew[0])),
        )

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def neighbor_weights(self, v: int) -> np.ndarray:
        return self.weights[self.indptr[v]:self.indptr[v + 1]]

    def weight(self, u: int, v: int) -> float:
        """Return ``A_uv`` (0.0 when the vertices are not adjacent)."""
        nbrs = self.neighbors(u)
        i = np.searchsorted(nbrs, v)
        if i < len(nbrs) and nbrs[i] == v:
            return float(self.weights[self.indptr[u] + i])
        return 0.0

    def adjacency(self) -> np.ndarray:
        """Dense adjacency matrix; intended for small graphs only."""
        a = np.zeros((self.n, self.n))
        a[self.edge_u, self.edge_v] = self.edge_w
        a[self.edge_v, self.edge_u] = self.edge_w
        return a

    def to_scipy(self):
        import scipy.sparse as sp

        return sp.csr_matrix((self.weights, self.indices, self.indptr), shape=(self.n, self.n))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and self.m == other.m
            and np.array_equal(self.edge_u, other.edge_u)
            and np.array_equal(self.edge_v, other.edge_v)
            and np.array_equal(self.edge_w, other.edge_w)
        )

    __hash__ = None  # type: ignore[assignment]


def _open_lines(source) -> Iterable[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return fh.read().splitlines()
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8").splitlines()
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return data.splitlines()
    return [line.decode("utf-8") if isinstance(line, bytes) else line for line in source]


def load_edge_list(source, weighted: bool = False) -> tuple[Graph, np.ndarray]:
    """Parse a whitespace-separated edge list.

    ``source`` may be a path, bytes, a file object or an iterable of lines.
    Lines are ``u v`` or ``u v w``; ``#`` starts a comment line. The third
    column is ignored unless ``weighted`` is set.

    Returns the graph and ``raw_ids`` where ``raw_ids[dense_id]`` is the
    original vertex id. Dense ids follow ascending raw id.
    """
    us: list[int] = []
    vs: list[int] = []
    ws: list[float] = []
    for lineno, raw in enumerate(_open_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphFormatError(f"expected 2 or 3 fields, got {len(parts)}", lineno)
        try:
            a, b = int(parts[0]), int(parts[1])
            wt = float(parts[2]) if weighted and len(parts) == 3 else 1.0
        except ValueError:
            raise GraphFormatError(f"malformed line {line!r}", lineno) from None
        if a < 0 or b < 0:
            raise GraphFormatError("vertex ids must be nonnegative", lineno)
        if a == b:
            raise GraphFormatError(f"self-loop on vertex {a}", lineno)
        if not np.isfinite(wt) or wt <= 0:
            raise GraphFormatError(f"non-positive weight {parts[2]}", lineno)
        us.append(a)
        vs.append(b)
        ws.append(wt)
    if not us:
        raise GraphFormatError("edge list is empty")
    raw_ids, inv = np.unique(np.array(us + vs, dtype=np.int64), return_inverse=True)
    k = len(us)
    g = Graph.from_edges(len(raw_ids), inv[:k], inv[k:], np.array(ws), weighted=weighted)
    return g, raw_ids


def write_edge_list(g: Graph, out: IO[str], raw_ids: np.ndarray | None = None) -> None:
    """Write each edge once as ``u v w`` with round-trippable weights."""
    ids = np.arange(g.n) if raw_ids is None else raw_ids
    for a, b, w in zip(g.edge_u, g.edge_v, g.edge_w):
        out.write(f"{ids[a]} {ids[b]} {float(w)!r}\n")


def write_mapping(raw_ids: np.ndarray, out: IO[str]) -> None:
    for dense, raw in enumerate(raw_ids):
        out.write(f"{raw} {dense}\n")


def read_mapping(source) -> np.ndarray:
    """Inverse of ``write_mapping``: returns ``raw_ids`` indexed by dense id."""
    pairs = []
    for lineno, raw in enumerate(_open_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError("mapping lines are 'raw_id dense_id'", lineno)
        try:
            pairs.append((int(parts[1]), int(parts[0])))
        except ValueError:
            raise GraphFormatError(f"malformed line {line!r}", lineno) from None
    pairs.sort()
    dense = [p[0] for p in pairs]
    if dense != list(range(len(dense))):
        raise GraphFormatError("mapping dense ids are not contiguous from 0")
    return np.array([p[1] for p in pairs], dtype=np.int64)


def sample_neighbor(g: Graph, v: int, rng: np.random.Generator) -> int:
    """Draw neighbor ``u`` of ``v`` with probability ``A_vu / d_v``."""
    return int(g.indices[_pick_slot(g, v, rng)])


def _pick_slot(g: Graph, v: int, rng: np.random.Generator) -> int:
    lo, hi = int(g.indptr[v]), int(g.indptr[v + 1])
    if g.uniform:
        return lo + int(rng.integers(hi - lo))
    target = rng.random() * g.prefix[hi - 1]
    slot = lo + int(np.searchsorted(g.prefix[lo:hi], target, side="right"))
    return min(slot, hi - 1)


def random_walk_with_cost(g: Graph, start: int, steps: int, rng: np.random.Generator) -> tuple[int, float]:
    """Walk ``steps`` hops from ``start``; cost sums ``2 / A`` over the edges used."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    v = start
    cost = 0.0
    for _ in range(steps):
        slot = _pick_slot(g, v, rng)
        cost += 2.0 / g.weights[slot]
        v = int(g.indices[slot])
    return v, cost


def sample_neighbor_slots(g: Graph, vs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorized neighbor draw; returns CSR slots (index into ``indices``)."""
    lo = g.indptr[vs]
    hi = g.indptr[vs + 1]
    if g.uniform:
        return lo + rng.integers(0, hi - lo)
    hi = hi - 1
    target = rng.random(len(vs)) * g.prefix[hi]
    # binary search inside each row's prefix sums
    while True:
        active = lo < hi
        if not active.any():
            return lo
        mid = (lo + hi) // 2
        right = active & (g.prefix[mid] <= target)
        left = active & ~right
        lo = np.where(right, mid + 1, lo)
        hi = np.where(left, mid, hi)


def walk_batch(
    g: Graph, starts: np.ndarray, steps: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``random_walk_with_cost`` over many (start, steps) pairs."""
    ends = np.array(starts, dtype=np.int64, copy=True)
    cost = np.zeros(len(ends))
    steps = np.asarray(steps)
    if len(ends) == 0:
        return ends, cost
    for s in range(int(steps.max(initial=0))):
        idx = np.flatnonzero(steps > s)
        slots = sample_neighbor_slots(g, ends[idx], rng)
        cost[idx] += 2.0 / g.weights[slots]
        ends[idx] = g.indices[slots]
    return ends, cost
