import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sparsemf.factorization import (
    NumericalRankError,
    embed,
    gaussian_matrix,
    jacobi_svd,
    orthonormalize,
    randomized_svd,
    read_embedding_binary,
    read_embedding_text,
    scree_data,
    write_embedding_binary,
    write_embedding_text,
)
from sparsemf.sparse import SparseMatrix


def random_symmetric(n, rank, rng, decay=None):
    q, _ = np.linalg.qr(rng.standard_normal((n, rank)))
    if decay is None:
        vals = rng.uniform(0.5, 5.0, rank) * rng.choice([-1, 1], rank)
    else:
        vals = decay ** np.arange(rank)
    return (q * vals) @ q.T


class TestOrthonormalize:
    def test_two_by_two(self):
        q = orthonormalize(np.array([[1.0, 1.0], [0.0, 1.0]]))
        np.testing.assert_allclose(np.abs(q), np.eye(2), atol=1e-15)

    def test_idempotent(self, rng):
        q0, _ = np.linalg.qr(rng.standard_normal((20, 5)))
        np.testing.assert_allclose(orthonormalize(q0), q0, atol=1e-12)

    def test_identical_columns(self):
        with pytest.raises(NumericalRankError) as err:
            orthonormalize(np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]))
        assert err.value.column == 1

    def test_completion(self):
        q = orthonormalize(np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]), complete=True)
        np.testing.assert_allclose(q.T @ q, np.eye(2), atol=1e-12)

    @given(st.integers(0, 2**31 - 1), st.integers(1, 12))
    def test_orthonormal_same_span(self, seed, d):
        y = np.random.default_rng(seed).standard_normal((30, d))
        q = orthonormalize(y)
        np.testing.assert_allclose(q.T @ q, np.eye(d), atol=1e-10)
        # y lies in span(q)
        np.testing.assert_allclose(q @ (q.T @ y), y, atol=1e-9)

    def test_ill_conditioned_stays_orthogonal(self, rng):
        u, _ = np.linalg.qr(rng.standard_normal((50, 8)))
        y = u * np.logspace(0, -9, 8)
        q = orthonormalize(y)
        np.testing.assert_allclose(q.T @ q, np.eye(8), atol=1e-10)


class TestJacobi:
    def test_diagonal(self):
        u, s, v = jacobi_svd(np.diag([2.0, 5.0]))
        np.testing.assert_allclose(s, [5, 2])
        np.testing.assert_allclose(np.abs(u), [[0, 1], [1, 0]], atol=1e-15)

    def test_rotation(self):
        t = 0.7
        _, s, _ = jacobi_svd(np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]]))
        np.testing.assert_allclose(s, [1, 1], atol=1e-14)

    def test_permuted_diagonal(self):
        _, s, _ = jacobi_svd(np.array([[0.0, 2.0], [1.0, 0.0]]))
        np.testing.assert_allclose(s, [2, 1], atol=1e-14)

    @given(st.integers(0, 2**31 - 1), st.integers(1, 15))
    def test_against_dense_svd(self, seed, d):
        c = np.random.default_rng(seed).standard_normal((d, d))
        u, s, v = jacobi_svd(c)
        np.testing.assert_allclose(s, np.linalg.svd(c, compute_uv=False), rtol=1e-10, atol=1e-12)
        assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
        np.testing.assert_allclose((u * s) @ v.T, c, atol=1e-10 * np.linalg.norm(c))
        np.testing.assert_allclose(u.T @ u, np.eye(d), atol=1e-10)
        np.testing.assert_allclose(v.T @ v, np.eye(d), atol=1e-10)

    def test_singular_input(self):
        c = np.outer([1.0, 2.0, 3.0], [1.0, -1.0, 0.5])
        u, s, v = jacobi_svd(c)
        np.testing.assert_allclose(s[1:], 0, atol=1e-14)
        np.testing.assert_allclose(u.T @ u, np.eye(3), atol=1e-10)
        np.testing.assert_allclose((u * s) @ v.T, c, atol=1e-12)

    def test_zero(self):
        u, s, v = jacobi_svd(np.zeros((3, 3)))
        np.testing.assert_array_equal(s, 0)


class TestRandomizedSvd:
    def test_identity(self):
        _, s, _ = randomized_svd(SparseMatrix.from_dense(np.eye(3)), 3)
        np.testing.assert_allclose(s, 1, atol=1e-10)

    def test_diagonal_tail(self):
        a = SparseMatrix.from_dense(np.diag([4.0, 3.0, 2.0, 1.0]))
        # without oversampling the sketch only bounds the top values from above
        _, s, _ = randomized_svd(a, 2, seed=0)
        assert np.all(s <= np.array([4.0, 3.0]) + 1e-8)
        # with enough oversampling the range is captured exactly
        _, s, _ = randomized_svd(a, 2, seed=0, oversample=2)
        np.testing.assert_allclose(s, [4, 3], atol=1e-8)

    def test_rank_one(self):
        x = np.array([1.0, 2.0, 2.0])
        _, s, _ = randomized_svd(np.outer(x, x), 3)
        assert s[0] == pytest.approx(9.0, abs=1e-8)
        np.testing.assert_allclose(s[1:], 0, atol=1e-8)

    def test_rank_one_strict(self):
        x = np.array([1.0, 2.0, 2.0])
        with pytest.raises(NumericalRankError):
            randomized_svd(np.outer(x, x), 3, strict=True)

    @given(st.integers(0, 2**31 - 1), st.integers(1, 8))
    def test_exact_low_rank(self, seed, rank):
        rng = np.random.default_rng(seed)
        a = random_symmetric(40, rank, rng)
        d = 8
        u, s, v = randomized_svd(SparseMatrix.from_dense(a), d, seed=seed)
        assert np.linalg.norm(a - (u * s) @ v.T) / np.linalg.norm(a) < 1e-8
        assert np.all(np.diff(s) <= 0) and np.all(s >= 0)

    def test_values_bounded_by_exact(self, rng):
        a = random_symmetric(60, 60, rng, decay=0.8)
        _, s, _ = randomized_svd(a, 10, seed=1)
        exact = np.linalg.svd(a, compute_uv=False)[:10]
        assert np.all(s <= exact + 1e-8)
        assert s[0] == pytest.approx(exact[0], rel=0.05)

    def test_sparse_and_dense_agree(self, rng):
        a = random_symmetric(30, 30, rng)
        s1 = randomized_svd(a, 5, seed=3)[1]
        s2 = randomized_svd(SparseMatrix.from_dense(a), 5, seed=3)[1]
        np.testing.assert_allclose(s1, s2, rtol=1e-12)

    def test_seed_determinism(self, rng):
        a = SparseMatrix.from_dense(random_symmetric(30, 30, rng))
        r1, r2 = randomized_svd(a, 4, seed=9), randomized_svd(a, 4, seed=9)
        for x, y in zip(r1, r2):
            np.testing.assert_array_equal(x, y)

    def test_threads_do_not_change_result(self, rng):
        a = SparseMatrix.from_dense(random_symmetric(50, 50, rng))
        r1, r2 = randomized_svd(a, 4, seed=9, threads=1), randomized_svd(a, 4, seed=9, threads=3)
        for x, y in zip(r1, r2):
            np.testing.assert_array_equal(x, y)

    def test_d_larger_than_n(self):
        with pytest.raises(ValueError):
            randomized_svd(np.eye(2), 3)


def test_gaussian_is_keyed():
    a = gaussian_matrix(5, 0, (4, 3))
    np.testing.assert_array_equal(a, gaussian_matrix(5, 0, (4, 3)))
    assert not np.array_equal(a, gaussian_matrix(5, 1, (4, 3)))
    assert not np.array_equal(a, gaussian_matrix(6, 0, (4, 3)))
    # counter based: a longer draw starts with the same stream
    np.testing.assert_array_equal(gaussian_matrix(5, 0, (1, 12)).ravel()[:12], a.ravel())


class TestEmbed:
    def test_sqrt_scaling(self):
        np.testing.assert_array_equal(embed(np.eye(2), [4.0, 1.0]), [[2, 0], [0, 1]])

    def test_zero_spectrum(self):
        np.testing.assert_array_equal(embed(np.ones((3, 2)), [0.0, 0.0]), 0)

    def test_unit_spectrum(self):
        np.testing.assert_array_equal(embed(np.array([[0.6, 0.8]]), [1.0, 1.0]), [[0.6, 0.8]])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            embed(np.eye(2), [1.0, -1.0])

    @given(st.integers(0, 2**31 - 1))
    def test_row_norms(self, seed):
        rng = np.random.default_rng(seed)
        u = rng.standard_normal((6, 3))
        s = np.sort(rng.uniform(0, 3, 3))[::-1]
        np.testing.assert_allclose((embed(u, s) ** 2).sum(axis=1), (u**2 * s).sum(axis=1), rtol=1e-12)


class TestScree:
    def test_pairs(self):
        assert scree_data([3, 2, 1]) == [(1, 3.0), (2, 2.0), (3, 1.0)]

    def test_empty(self):
        assert scree_data([]) == []

    def test_unsorted(self):
        with pytest.raises(ValueError):
            scree_data([1, 2])


class TestEmbeddingFiles:
    def test_text_roundtrip(self, rng):
        emb = rng.standard_normal((5, 3))
        buf = io.StringIO()
        write_embedding_text(emb, buf)
        assert buf.getvalue().startswith("5 3\n0 ")
        buf.seek(0)
        np.testing.assert_array_equal(read_embedding_text(buf), emb)

    def test_binary_layout(self, rng):
        emb = rng.standard_normal((4, 2))
        buf = io.BytesIO()
        write_embedding_binary(emb, buf)
        raw = buf.getvalue()
        assert raw[:4] == b"NSMF"
        assert len(raw) == 24 + 8 * 8
        assert int.from_bytes(raw[8:16], "little") == 4
        assert int.from_bytes(raw[16:20], "little") == 2
        np.testing.assert_array_equal(np.frombuffer(raw[24:], "<f8").reshape(4, 2), emb)
        buf.seek(0)
        np.testing.assert_array_equal(read_embedding_binary(buf), emb)
