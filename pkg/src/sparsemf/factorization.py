"""Randomized truncated SVD for symmetric matrices and embedding output.

The sketch follows the two-pass scheme: ``Y = orth(A O)``, ``B = A Y``,
``Z = orth(B P)``, ``C = Z^T B``, then a one-sided Jacobi SVD of the small
``d x d`` matrix ``C``. Symmetry of ``A`` means ``A^T O`` is just ``A O``.
"""

from __future__ import annotations

import struct
from typing import IO

import numpy as np
import scipy.sparse as sp

from .sparse import SparseMatrix, spmm

RANK_TOL = 1e-12
EMBEDDING_MAGIC = b"NSMF"
EMBEDDING_VERSION = 1
_HEADER = struct.Struct("<4sIQI4x")


class NumericalRankError(ArithmeticError):
    def __init__(self, column: int, message: str | None = None):
        self.column = column
        super().__init__(message or f"numerical rank deficiency at column {column}")


class ConvergenceError(ArithmeticError):
    pass


def gaussian_matrix(seed: int, tag: int, shape: tuple[int, int]) -> np.ndarray:
    """Standard normal matrix from a Philox stream keyed by ``(seed, tag)``.

    Philox is counter based, so entry ``k`` (row-major) depends only on the
    key and its position.
    """
    key = np.random.SeedSequence([int(seed) & (2**64 - 1), tag]).generate_state(2, np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    return rng.standard_normal(shape)


def _complete_column(q: np.ndarray, j: int) -> np.ndarray:
    # basis vector with the largest component outside span(q[:, :j])
    k = int(np.argmin(np.einsum("ij,ij->i", q[:, :j], q[:, :j])))
    e = np.zeros(q.shape[0])
    e[k] = 1.0
    return e


def orthonormalize(y: np.ndarray, complete: bool = False) -> np.ndarray:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    A column whose residual falls below ``RANK_TOL`` times its original norm
    raises ``NumericalRankError``; with ``complete=True`` it is replaced by a
    standard basis vector orthogonalized against the earlier columns.
    """
    y = np.asarray(y, dtype=np.float64)
    n, d = y.shape
    if n < d:
        raise NumericalRankError(n, f"cannot orthonormalize {d} columns in dimension {n}")
    q = np.array(y, copy=True, order="F")
    for j in range(d):
        v = q[:, j]
        norm0 = np.linalg.norm(v)
        for _ in range(2):
            for i in range(j):
                v -= (q[:, i] @ v) * q[:, i]
        norm = np.linalg.norm(v)
        if norm0 == 0.0 or norm <= RANK_TOL * norm0:
            if not complete:
                raise NumericalRankError(j)
            v[:] = _complete_column(q, j)
            for _ in range(2):
                for i in range(j):
                    v -= (q[:, i] @ v) * q[:, i]
            norm = np.linalg.norm(v)
        v /= norm
    return np.ascontiguousarray(q)


def jacobi_svd(c: np.ndarray, tol: float = 1e-15, max_sweeps: int = 60):
    """One-sided (Hestenes) Jacobi SVD of a square matrix.

    Returns ``(U, S, V)`` with ``c = U diag(S) V^T``, ``S`` sorted descending.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("jacobi_svd expects a square matrix")
    d = c.shape[0]
    w = np.array(c, copy=True, order="F")
    v = np.eye(d, order="F")
    for _ in range(max_sweeps):
        rotated = False
        for p in range(d - 1):
            for q in range(p + 1, d):
                wp, wq = w[:, p], w[:, q]
                alpha = wp @ wp
                beta = wq @ wq
                gamma = wp @ wq
                if gamma == 0.0 or abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                cs = 1.0 / np.sqrt(1.0 + t * t)
                sn = cs * t
                for m in (w, v):
                    mp = m[:, p].copy()
                    m[:, p] = cs * mp - sn * m[:, q]
                    m[:, q] = sn * mp + cs * m[:, q]
        if not rotated:
            break
    else:
        raise ConvergenceError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")

    s = np.linalg.norm(w, axis=0)
    order = np.argsort(-s, kind="stable")
    s, w, v = s[order], w[:, order], v[:, order]
    u = np.zeros_like(w)
    scale = s.max(initial=0.0)
    good = s > scale * d * np.finfo(float).eps if scale > 0 else np.zeros(d, bool)
    u[:, good] = w[:, good] / s[good]
    s = np.where(good, s, 0.0)
    if not good.all():
        u = orthonormalize(u, complete=True) if good.any() else np.eye(d)
    return np.ascontiguousarray(u), s, np.ascontiguousarray(v)


def _operator(a):
    if isinstance(a, SparseMatrix):
        if not a.symmetric:
            raise ValueError("randomized_svd expects a symmetric matrix")
        return a.to_csr(), a.n
    if sp.issparse(a):
        return sp.csr_matrix(a), a.shape[0]
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("randomized_svd expects a square matrix")
    return a, a.shape[0]


def randomized_svd(a, d: int, seed: int = 0, threads: int = 1, oversample: int = 0, strict: bool = False):
    """Rank-``d`` SVD sketch of the symmetric matrix ``a``.

    ``a`` may be a ``SparseMatrix``, a scipy sparse matrix or a dense array.
    Returns ``(U, S, V)``, each factor ``n x d``.

    If ``a`` has rank below ``d`` the sketch bases are rank deficient. By
    default the missing directions are filled with orthonormal completions
    (their singular values come out as zero); ``strict=True`` raises
    ``NumericalRankError`` instead.
    """
    op, n = _operator(a)
    if d < 1 or d > n:
        raise ValueError(f"need 1 <= d <= n, got d={d}, n={n}")
    k = min(n, d + max(0, oversample))

    def mul(x):
        if isinstance(op, np.ndarray):
            return op @ x
        return spmm(op, x, threads)

    o = gaussian_matrix(seed, 0, (n, k))
    y = orthonormalize(mul(o), complete=not strict)
    b = mul(y)
    p = gaussian_matrix(seed, 1, (k, k))
    z = orthonormalize(b @ p, complete=not strict)
    c = z.T @ b
    cu, s, cv = jacobi_svd(c)
    return (z @ cu)[:, :d], s[:d], (y @ cv)[:, :d]


def embed(u: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Scale column ``j`` of ``u`` by ``sqrt(s_j)``."""
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0):
        raise ValueError("singular values must be nonnegative")
    return np.asarray(u) * np.sqrt(s)


def scree_data(s) -> list[tuple[int, float]]:
    s = [float(x) for x in s]
    if any(b > a for a, b in zip(s, s[1:])):
        raise ValueError("singular values must be sorted in nonincreasing order")
    return [(i + 1, x) for i, x in enumerate(s)]


def write_embedding_text(emb: np.ndarray, out: IO[str]) -> None:
    n, d = emb.shape
    out.write(f"{n} {d}\n")
    for i, row in enumerate(emb):
        out.write(str(i) + " " + " ".join(f"{x:.17g}" for x in row) + "\n")


def read_embedding_text(src: IO[str]) -> np.ndarray:
    header = src.readline().split()
    if len(header) != 2:
        raise ValueError("embedding header must be 'n d'")
    n, d = int(header[0]), int(header[1])
    emb = np.zeros((n, d))
    seen = np.zeros(n, dtype=bool)
    for line in src:
        parts = line.split()
        if not parts:
            continue
        if len(parts) != d + 1:
            raise ValueError(f"expected {d + 1} fields per embedding row")
        i = int(parts[0])
        emb[i] = [float(x) for x in parts[1:]]
        seen[i] = True
    if not seen.all():
        raise ValueError("embedding file is missing rows")
    return emb


def write_embedding_binary(emb: np.ndarray, out: IO[bytes]) -> None:
    n, d = emb.shape
    out.write(_HEADER.pack(EMBEDDING_MAGIC, EMBEDDING_VERSION, n, d))
    out.write(np.ascontiguousarray(emb, dtype="<f8").tobytes())


def read_embedding_binary(src: IO[bytes]) -> np.ndarray:
    magic, version, n, d = _HEADER.unpack(src.read(_HEADER.size))
    if magic != EMBEDDING_MAGIC:
        raise ValueError("not a binary embedding file")
    if version != EMBEDDING_VERSION:
        raise ValueError(f"unsupported embedding version {version}")
    data = np.frombuffer(src.read(8 * n * d), dtype="<f8")
    if data.size != n * d:
        raise ValueError("truncated embedding file")
    return data.reshape(n, d).astype(np.float64)


def read_embedding(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == EMBEDDING_MAGIC:
        with open(path, "rb") as fh:
            return read_embedding_binary(fh)
    with open(path, encoding="utf-8") as fh:
        return read_embedding_text(fh)
