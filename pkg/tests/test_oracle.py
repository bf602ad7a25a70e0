import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from sparsemf.config import PipelineConfig
from sparsemf.oracle import (
    IncomparableError,
    InvalidPathError,
    OracleSizeError,
    OutOfRegimeError,
    check_frobenius_bound,
    check_singular_bound,
    endpoint_distribution,
    enumerate_paths,
    exact_deepwalk_matrix,
    exact_L,
    exact_M,
    exact_netmf_matrix,
    m_from_laplacian,
    measure_epsilon,
    monte_carlo_unbiasedness,
    path_frequencies,
    path_probability,
    tau,
    uniform_alpha,
)
from sparsemf.sparsifier import build_sparsifier, laplacian_of
from sparsemf.synthetic import path_graph, random_connected, triangle


def test_reference_fixtures_agree(tri, wtri):
    np.testing.assert_array_equal(triangle().adjacency(), tri.adjacency())
    np.testing.assert_array_equal(triangle((2, 1, 1)).adjacency(), wtri.adjacency())


class TestExactM:
    def test_triangle_t1(self, tri):
        np.testing.assert_allclose(exact_M(tri, 1), tri.adjacency() / 4, atol=1e-15)

    def test_triangle_t2(self, tri):
        m = exact_M(tri, 2)
        assert m[0, 1] == pytest.approx(0.1875, abs=1e-15)
        assert m[0, 0] == pytest.approx(0.125, abs=1e-15)

    def test_path_t1(self, path3):
        m = exact_M(path3, 1)
        assert m[0, 1] == pytest.approx(0.5)
        assert m[0, 2] == 0

    def test_cap(self):
        with pytest.raises(OracleSizeError):
            exact_M(path_graph(10), 1, cap=5)

    @given(st.integers(0, 2**31 - 1), st.integers(1, 6), st.booleans())
    def test_symmetric(self, seed, T, weighted):
        g = random_connected(12, 0.3, np.random.default_rng(seed), weighted=weighted)
        m = exact_M(g, T)
        np.testing.assert_array_equal(m, m.T)


class TestNetmfMatrix:
    def test_triangle_t1(self, tri):
        x = exact_netmf_matrix(tri, 1)
        assert x[0, 1] == pytest.approx(math.log(1.5), abs=1e-12)
        assert x[0, 0] == 0

    def test_triangle_t2(self, tri):
        x = exact_netmf_matrix(tri, 2)
        assert x[0, 1] == pytest.approx(math.log(1.125), abs=1e-12)
        # 6 * 0.125 = 0.75 is truncated
        assert x[0, 0] == 0

    def test_path(self, path3):
        assert exact_netmf_matrix(path3, 1)[0, 1] == pytest.approx(math.log(2), abs=1e-12)

    def test_negative_sampling_shift(self, tri):
        x = exact_netmf_matrix(tri, 1, b=0.5)
        assert x[0, 1] == pytest.approx(math.log(3.0), abs=1e-12)

    def test_untruncated_variant_flags_zeros(self, path3):
        x, undefined = exact_deepwalk_matrix(path3, 1)
        assert undefined[0, 2] and undefined[0, 0]
        assert x[0, 2] == 0
        assert not undefined[0, 1]
        # untruncated keeps the negative log where trunc_log would clip it
        y, undefined = exact_deepwalk_matrix(triangle(), 2)
        assert y[0, 0] == pytest.approx(math.log(0.75))
        assert not undefined.any()


class TestExactL:
    def test_t1_is_combinatorial_laplacian(self, tri):
        np.testing.assert_allclose(exact_L(tri, [1.0]), 2 * np.eye(3) - tri.adjacency(), atol=1e-15)

    def test_triangle_t2(self, tri):
        lap = exact_L(tri, [0.5, 0.5])
        assert lap[0, 0] == pytest.approx(1.5)
        assert lap[0, 1] == pytest.approx(-0.75)

    @pytest.mark.parametrize("alpha", [[0.5, 0.4], [1.2, -0.2], []])
    def test_invalid_alpha(self, tri, alpha):
        with pytest.raises(ValueError):
            exact_L(tri, alpha)

    @given(st.integers(0, 2**31 - 1), st.integers(1, 6), st.booleans())
    def test_identity(self, seed, T, weighted):
        g = random_connected(15, 0.25, np.random.default_rng(seed), weighted=weighted)
        m = exact_M(g, T)
        other = m_from_laplacian(g, exact_L(g, uniform_alpha(T)))
        assert np.linalg.norm(m - other) <= 1e-12 * np.linalg.norm(m)

    @given(st.integers(0, 2**31 - 1), st.integers(1, 5))
    def test_rows_sum_to_zero(self, seed, T):
        g = random_connected(10, 0.3, np.random.default_rng(seed), weighted=True)
        lap = exact_L(g, uniform_alpha(T))
        np.testing.assert_allclose(lap.sum(axis=1), 0, atol=1e-12 * g.volume)


class TestPathProbability:
    def test_triangle_edge(self, tri):
        assert tau(tri, (0, 1)) == pytest.approx(1 / 3)
        assert sum(path_probability(tri, p) for p in enumerate_paths(tri, 1)) == pytest.approx(1, abs=1e-12)

    def test_triangle_length_two(self, tri):
        assert tau(tri, (0, 1, 2)) == pytest.approx(1 / 6)

    def test_triangle_length_two_enumeration(self, tri):
        paths = list(enumerate_paths(tri, 2))
        # three open paths plus six backtracking walks, each a palindrome
        assert len(paths) == 9
        assert sum(p == p[::-1] for p in paths) == 6
        assert math.fsum(path_probability(tri, p) for p in paths) == pytest.approx(1, abs=1e-12)

    def test_weighted_edge_keeps_uniform_pick(self, wtri):
        assert tau(wtri, (0, 1)) == pytest.approx(1 / 3)
        assert tau(wtri, (1, 2)) == pytest.approx(1 / 3)

    def test_reversal_invariant(self, wtri):
        assert tau(wtri, (0, 1, 2, 0)) == pytest.approx(tau(wtri, (0, 2, 1, 0)))

    def test_invalid_path(self, path3):
        with pytest.raises(InvalidPathError):
            tau(path3, (0, 2))
        with pytest.raises(InvalidPathError):
            tau(path3, (0,))

    @given(st.integers(0, 2**31 - 1), st.integers(1, 4), st.booleans())
    def test_sums_to_one(self, seed, r, weighted):
        rng = np.random.default_rng(seed)
        g = random_connected(int(rng.integers(2, 9)), 0.4, rng, weighted=weighted)
        total = math.fsum(path_probability(g, p) for p in enumerate_paths(g, r))
        assert total == pytest.approx(1, abs=1e-12)

    def test_endpoint_distribution_sums_to_one(self, path4):
        for r in (1, 2, 3):
            assert math.fsum(endpoint_distribution(path4, r).values()) == pytest.approx(1, abs=1e-12)

    @pytest.mark.parametrize("which", ["tri", "wtri"])
    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_sampling_frequencies(self, request, which, r):
        g = request.getfixturevalue(which)
        draws = 20_000
        counts = path_frequencies(g, r, draws, np.random.default_rng(100 + r))
        paths = list(enumerate_paths(g, r))
        assert set(counts) <= set(paths)
        obs = np.array([counts.get(p, 0) for p in paths], dtype=float)
        exp = draws * np.array([path_probability(g, p) for p in paths])
        assert chisquare(obs, exp).pvalue > 0.001


class TestMeasureEpsilon:
    def _tri_l(self):
        return exact_L(triangle(), [1.0])

    def test_identical(self):
        lap = self._tri_l()
        assert measure_epsilon(lap, lap) == pytest.approx(0, abs=1e-12)

    @pytest.mark.parametrize("c, eps", [(1.2, 1 / 6), (1.1, 1 / 11)])
    def test_scaled(self, c, eps):
        lap = self._tri_l()
        assert measure_epsilon(c * lap, lap) == pytest.approx(eps, abs=1e-12)

    @given(st.floats(0.51, 1.99), st.integers(0, 2**31 - 1))
    def test_scaled_random(self, c, seed):
        g = random_connected(12, 0.3, np.random.default_rng(seed), weighted=True)
        lap = exact_L(g, uniform_alpha(3))
        assert measure_epsilon(c * lap, lap) == pytest.approx(abs(1 - 1 / c), abs=1e-9)

    def test_defining_inequality(self, rng):
        g = random_connected(10, 0.4, rng, weighted=True)
        lap = exact_L(g, uniform_alpha(2))
        pert = lap + 0.05 * exact_L(random_connected(10, 0.4, rng), [1.0])
        eps = measure_epsilon(pert, lap)
        for _ in range(200):
            x = rng.standard_normal(10)
            q, qt = x @ lap @ x, x @ pert @ x
            assert (1 - eps) * qt <= q * (1 + 1e-12) and q <= (1 + eps) * qt * (1 + 1e-12)

    def test_disconnected_rejected(self):
        lap = np.zeros((4, 4))
        lap[:2, :2] = [[1, -1], [-1, 1]]
        lap[2:, 2:] = [[1, -1], [-1, 1]]
        with pytest.raises(IncomparableError):
            measure_epsilon(lap, exact_L(path_graph(4), [1.0]))

    def test_not_a_laplacian(self):
        with pytest.raises(IncomparableError):
            measure_epsilon(np.eye(3), self._tri_l())

    def test_shape_mismatch(self):
        with pytest.raises(IncomparableError):
            measure_epsilon(np.eye(2), self._tri_l())


class TestBounds:
    def test_identical_passes(self, tri):
        m = exact_M(tri, 2)
        rep = check_singular_bound(m, m, 0.0, tri)
        assert rep.passed and rep.summary() == "PASS"
        np.testing.assert_allclose(rep.sigma, 0, atol=1e-15)
        lap = exact_L(tri, [0.5, 0.5])
        frob = check_frobenius_bound(tri, lap, lap, 0.0)
        assert frob.lhs == 0 and frob.passed

    def test_scaled_triangle(self, tri):
        lap = exact_L(tri, [1.0])
        eps = measure_epsilon(1.1 * lap, lap)
        rep = check_singular_bound(m_from_laplacian(tri, 1.1 * lap), m_from_laplacian(tri, lap), eps, tri)
        np.testing.assert_allclose(rep.sigma, [0.075, 0.075, 0], atol=1e-12)
        np.testing.assert_allclose(rep.bound, 4 / 11 / 2)
        assert rep.passed
        assert rep.table().splitlines()[0] == "index\tsigma\tbound\tmargin"
        assert len(rep.table().splitlines()) == 4

    def test_scaled_triangle_frobenius(self, tri):
        lap = exact_L(tri, [1.0])
        rep = check_frobenius_bound(tri, 1.1 * lap, lap, 1 / 11)
        assert rep.bound == pytest.approx(4 / 11 * 6 / math.sqrt(2) * math.sqrt(1.5), rel=1e-12)
        assert rep.bound == pytest.approx(1.8898, abs=1e-3)
        assert rep.lhs <= rep.bound and rep.passed

    def test_failure_summary(self, tri):
        m = exact_M(tri, 1)
        rep = check_singular_bound(m + np.eye(3), m, 0.1, tri)
        assert not rep.passed and rep.violations == 3
        assert rep.summary().startswith("FAIL epsilon=0.1 worst_margin=-")

    @pytest.mark.parametrize("eps", [0.5, 0.7, math.inf])
    def test_out_of_regime(self, tri, eps):
        m = exact_M(tri, 1)
        with pytest.raises(OutOfRegimeError):
            check_singular_bound(m, m, eps, tri)
        with pytest.raises(OutOfRegimeError):
            check_frobenius_bound(tri, np.eye(3), np.eye(3), eps)

    def test_sampled_triangle(self, tri):
        T = 2
        acc = build_sparsifier(tri, PipelineConfig(window=T, samples=100_000, seed=4))
        lt = laplacian_of(acc).todense()
        lap = exact_L(tri, uniform_alpha(T))
        eps = measure_epsilon(lt, lap)
        assert eps < 0.5
        assert check_singular_bound(m_from_laplacian(tri, lt), exact_M(tri, T), eps, tri).passed
        assert check_frobenius_bound(tri, lt, lap, eps).passed

    @pytest.mark.slow
    def test_sampled_random_graph(self):
        g = random_connected(30, 0.2, np.random.default_rng(8))
        T = 3
        acc = build_sparsifier(g, PipelineConfig(window=T, samples=1_000_000, seed=1))
        lt = laplacian_of(acc).todense()
        lap = exact_L(g, uniform_alpha(T))
        eps = measure_epsilon(lt, lap)
        assert eps < 0.5
        assert check_singular_bound(m_from_laplacian(g, lt), exact_M(g, T), eps, g).passed
        assert check_frobenius_bound(g, lt, lap, eps).passed


class TestUnbiasedness:
    def test_triangle_t1(self, tri):
        assert monte_carlo_unbiasedness(tri, 1, 100_000, 10, seed=0).distance < 0.01

    def test_triangle_t2(self, tri):
        assert monte_carlo_unbiasedness(tri, 2, 1_000_000, 5, seed=0).distance < 0.01

    def test_weighted_triangle_t2(self, wtri):
        rep = monte_carlo_unbiasedness(wtri, 2, 1_000_000, 5, seed=0)
        assert rep.distance < 0.02
        assert rep.mean_laplacian.shape == (3, 3)

    def test_cap(self):
        with pytest.raises(OracleSizeError):
            monte_carlo_unbiasedness(path_graph(10), 1, 10, 1, cap=5)
