"""Symmetric sparse matrices kept as sorted coordinate triplets."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Compacted COO matrix: row-major order, no duplicates, no stored zeros."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    symmetric: bool = True

    @classmethod
    def from_triplets(cls, n: int, rows, cols, values, symmetric: bool = True) -> "SparseMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        key = rows * n + cols
        uniq, inv = np.unique(key, return_inverse=True)
        vals = np.bincount(inv, weights=values, minlength=len(uniq))
        keep = vals != 0.0
        uniq, vals = uniq[keep], vals[keep]
        return cls(n, uniq // n, uniq % n, vals, symmetric)

    @classmethod
    def from_dense(cls, a: np.ndarray, symmetric: bool = True) -> "SparseMatrix":
        r, c = np.nonzero(a)
        return cls(a.shape[0], r.astype(np.int64), c.astype(np.int64), a[r, c].astype(np.float64), symmetric)

    @classmethod
    def zeros(cls, n: int) -> "SparseMatrix":
        e = np.zeros(0, dtype=np.int64)
        return cls(n, e, e.copy(), np.zeros(0))

    @property
    def nnz(self) -> int:
        return len(self.values)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def diagonal(self) -> np.ndarray:
        d = np.zeros(self.n)
        on = self.rows == self.cols
        d[self.rows[on]] = self.values[on]
        return d

    def is_symmetric(self) -> bool:
        """Bitwise check that every (i, j) has an equal (j, i) partner."""
        order = np.lexsort((self.rows, self.cols))
        return (
            np.array_equal(self.rows, self.cols[order])
            and np.array_equal(self.cols, self.rows[order])
            and np.array_equal(self.values, self.values[order])
        )

    def to_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, (self.rows, self.cols)), shape=self.shape)

    def todense(self) -> np.ndarray:
        a = np.zeros(self.shape)
        a[self.rows, self.cols] = self.values
        return a

    def matmul(self, x: np.ndarray, threads: int = 1) -> np.ndarray:
        return spmm(self.to_csr(), x, threads)


def spmm(a: sp.csr_matrix, x: np.ndarray, threads: int = 1) -> np.ndarray:
    """Row-blocked sparse @ dense; each output row depends only on its input row."""
    if threads <= 1 or a.shape[0] < 2 * threads:
        return np.asarray(a @ x)
    bounds = np.linspace(0, a.shape[0], threads + 1).astype(int)
    out = np.empty((a.shape[0], x.shape[1]))

    def work(i):
        lo, hi = bounds[i], bounds[i + 1]
        out[lo:hi] = a[lo:hi] @ x

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, range(threads)))
    return out
