"""Dense reference computations for small graphs.

Everything here is O(n^3) and capped at ``ORACLE_CAP`` vertices. These are
the ground truth the sampled pipeline is checked against: the exact
random-walk matrices, exact path probabilities, measured spectral
similarity, and the two approximation-error bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .graph import Graph
from .sparsifier import build_sparsifier, laplacian_of, path_sampling, trunc_log
from .config import PipelineConfig

ORACLE_CAP = 2000


class OracleSizeError(ValueError):
    pass


class IncomparableError(ValueError):
    pass


class OutOfRegimeError(ValueError):
    pass


class InvalidPathError(ValueError):
    pass


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise OracleSizeError(f"n={n} exceeds oracle cap {cap}")


def _sym(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + x.T)


def _transition_powers(g: Graph, T: int) -> Iterator[np.ndarray]:
    p = g.adjacency() / g.degrees[:, None]
    cur = p
    for r in range(1, T + 1):
        yield cur
        if r < T:
            cur = cur @ p


def exact_M(g: Graph, T: int, cap: int = ORACLE_CAP) -> np.ndarray:
    """``(1/T) sum_r (D^-1 A)^r D^-1``."""
    _check_cap(g.n, cap)
    if T < 1:
        raise ValueError("T must be >= 1")
    acc = np.zeros((g.n, g.n))
    for pr in _transition_powers(g, T):
        acc += pr
    return _sym(acc / g.degrees[None, :] / T)


def exact_netmf_matrix(g: Graph, T: int, b: float = 1.0, cap: int = ORACLE_CAP) -> np.ndarray:
    return trunc_log((g.volume / b) * exact_M(g, T, cap))


def exact_deepwalk_matrix(g: Graph, T: int, b: float = 1.0, cap: int = ORACLE_CAP):
    """Plain elementwise ``log(vol/b * M)``.

    Returns ``(matrix, undefined)``; entries whose argument is ``<= 0`` are
    set to 0 and flagged in the boolean ``undefined`` mask.
    """
    x = (g.volume / b) * exact_M(g, T, cap)
    undefined = x <= 0
    out = np.zeros_like(x)
    out[~undefined] = np.log(x[~undefined])
    return out, undefined


def exact_L(g: Graph, alpha: Sequence[float], cap: int = ORACLE_CAP) -> np.ndarray:
    """``D - sum_r alpha_r D (D^-1 A)^r``."""
    _check_cap(g.n, cap)
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim != 1 or len(alpha) < 1 or np.any(alpha < 0) or abs(math.fsum(alpha) - 1.0) > 1e-12:
        raise ValueError("alpha must be a nonnegative vector summing to 1")
    poly = np.zeros((g.n, g.n))
    for a_r, pr in zip(alpha, _transition_powers(g, len(alpha))):
        poly += a_r * pr
    return _sym(np.diag(g.degrees) - g.degrees[:, None] * poly)


def uniform_alpha(T: int) -> np.ndarray:
    return np.full(T, 1.0 / T)


def m_from_laplacian(g: Graph, lap: np.ndarray) -> np.ndarray:
    """``D^-1 (D - L) D^-1`` for a dense ``L``."""
    dinv = 1.0 / g.degrees
    return dinv[:, None] * (np.diag(g.degrees) - lap) * dinv[None, :]


def _tau(g: Graph, path: Sequence[int]) -> float:
    r = len(path) - 1
    if r < 1:
        raise InvalidPathError("a path needs at least one edge")
    prod_a = 1.0
    z = 0.0
    for a, b in zip(path, path[1:]):
        w = g.weight(int(a), int(b))
        if w <= 0:
            raise InvalidPathError(f"{a} and {b} are not adjacent")
        prod_a *= w
        z += 2.0 / w
    prod_d = math.prod(float(g.degrees[v]) for v in path[1:-1])
    return (prod_a / prod_d) * z / (2.0 * r * g.m)


def tau(g: Graph, path: Sequence[int]) -> float:
    """``w(p) Z(p) / (2 r m)`` for the vertex sequence ``path``."""
    return _tau(g, path)


def path_probability(g: Graph, path: Sequence[int]) -> float:
    """Probability that path sampling with length ``len(path) - 1`` yields ``path`` up to reversal.

    Equals ``tau(path)`` for ordinary paths. A path that reads the same
    reversed is a single sequence rather than a pair, so it gets ``tau / 2``.
    """
    t = _tau(g, path)
    if tuple(path) == tuple(reversed(path)):
        return 0.5 * t
    return t


def enumerate_paths(g: Graph, r: int) -> Iterator[tuple[int, ...]]:
    """All length-``r`` walks, one representative per reversal class."""
    def extend(prefix):
        if len(prefix) == r + 1:
            yield tuple(prefix)
            return
        for u in g.neighbors(prefix[-1]):
            prefix.append(int(u))
            yield from extend(prefix)
            prefix.pop()

    for s in range(g.n):
        for p in extend([s]):
            if p <= p[::-1]:
                yield p


def endpoint_distribution(g: Graph, r: int) -> dict[tuple[int, int], float]:
    """Probability of each unordered endpoint pair (self pairs included) for length ``r``."""
    out: dict[tuple[int, int], float] = {}
    for p in enumerate_paths(g, r):
        key = (min(p[0], p[-1]), max(p[0], p[-1]))
        out[key] = out.get(key, 0.0) + path_probability(g, p)
    return out


def path_frequencies(g: Graph, r: int, draws: int, rng: np.random.Generator) -> dict[tuple[int, ...], int]:
    """Run single-path sampling ``draws`` times and count each path up to reversal."""
    counts: dict[tuple[int, ...], int] = {}
    edges = rng.integers(0, g.m, size=draws)
    for e in edges:
        p = path_sampling(g, (g.edge_u[e], g.edge_v[e]), r, rng, record_path=True).path
        key = min(p, p[::-1])
        counts[key] = counts.get(key, 0) + 1
    return counts


def measure_epsilon(ltilde: np.ndarray, l: np.ndarray, tol: float = 1e-9) -> float:
    """Smallest ``eps`` with ``(1-eps) x'L~x <= x'Lx <= (1+eps) x'L~x`` for all x.

    Both inputs must be Laplacians of connected graphs (null space spanned
    by the all-ones vector).
    """
    ltilde = np.asarray(ltilde, dtype=np.float64)
    l = np.asarray(l, dtype=np.float64)
    n = l.shape[0]
    if ltilde.shape != l.shape:
        raise IncomparableError("shape mismatch")
    ones = np.ones(n) / math.sqrt(n)
    # orthonormal basis of the complement of the all-ones vector
    q, _ = np.linalg.qr(np.column_stack([ones, np.eye(n)[:, : n - 1]]))
    basis = q[:, 1:]
    for name, mat in (("reference", l), ("sparsifier", ltilde)):
        scale = max(np.abs(mat).max(), 1e-300)
        if np.abs(mat @ ones).max() > tol * scale * math.sqrt(n):
            raise IncomparableError(f"{name} does not annihilate the all-ones vector")
    lt_r = _sym(basis.T @ ltilde @ basis)
    l_r = _sym(basis.T @ l @ basis)
    for name, mat in (("reference", l_r), ("sparsifier", lt_r)):
        ev = np.linalg.eigvalsh(mat)
        if ev[0] <= tol * max(ev[-1], 1e-300):
            raise IncomparableError(f"{name} has a null space larger than span(1)")
    ev_t, vec_t = np.linalg.eigh(lt_r)
    whiten = vec_t / np.sqrt(ev_t)
    lam = np.linalg.eigvalsh(_sym(whiten.T @ l_r @ whiten))
    return float(max(abs(1.0 - lam[0]), abs(lam[-1] - 1.0)))


@dataclass
class SingularBoundReport:
    epsilon: float
    degrees: np.ndarray
    sigma: np.ndarray
    bound: np.ndarray

    @property
    def margin(self) -> np.ndarray:
        return self.bound - self.sigma

    @property
    def worst_margin(self) -> float:
        return float(self.margin.min())

    @property
    def violations(self) -> int:
        slack = 1e-12 * max(1.0, float(self.bound.max(initial=0.0)))
        return int(np.sum(self.sigma > self.bound + slack))

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def summary(self) -> str:
        if self.passed:
            return "PASS"
        return f"FAIL epsilon={self.epsilon:.6g} worst_margin={self.worst_margin:.6g}"

    def table(self) -> str:
        lines = ["index\tsigma\tbound\tmargin"]
        for i, (s, b) in enumerate(zip(self.sigma, self.bound), start=1):
            lines.append(f"{i}\t{s:.6e}\t{b:.6e}\t{b - s:.6e}")
        return "\n".join(lines)


@dataclass
class FrobeniusBoundReport:
    epsilon: float
    lhs: float
    bound: float

    @property
    def margin(self) -> float:
        return self.bound - self.lhs

    @property
    def worst_margin(self) -> float:
        return self.margin

    @property
    def passed(self) -> bool:
        return self.lhs <= self.bound + 1e-12 * max(1.0, self.bound)

    def summary(self) -> str:
        if self.passed:
            return "PASS"
        return f"FAIL epsilon={self.epsilon:.6g} worst_margin={self.worst_margin:.6g}"

    def table(self) -> str:
        return f"lhs\tbound\tmargin\n{self.lhs:.6e}\t{self.bound:.6e}\t{self.margin:.6e}"


def _check_regime(eps: float) -> None:
    if not eps < 0.5:
        raise OutOfRegimeError(f"epsilon={eps} is outside the eps < 0.5 regime")


def check_singular_bound(mtilde: np.ndarray, m: np.ndarray, eps: float, g: Graph) -> SingularBoundReport:
    """Compare descending ``sigma_i(M~ - M)`` with ``4 eps / sqrt(d_i d_min)``, degrees ascending."""
    _check_regime(eps)
    sigma = np.linalg.svd(np.asarray(mtilde) - np.asarray(m), compute_uv=False)
    deg = np.sort(g.degrees)
    bound = 4.0 * eps / np.sqrt(deg * deg[0])
    return SingularBoundReport(eps, deg, sigma, bound)


def check_frobenius_bound(
    g: Graph, ltilde: np.ndarray, l: np.ndarray, eps: float, b: float = 1.0
) -> FrobeniusBoundReport:
    """Frobenius distance of the truncated-log matrices versus its eps bound."""
    _check_regime(eps)
    scale = g.volume / b
    lhs = np.linalg.norm(
        trunc_log(scale * m_from_laplacian(g, ltilde)) - trunc_log(scale * m_from_laplacian(g, l))
    )
    dmin = float(g.degrees.min())
    bound = 4.0 * eps * g.volume / (b * math.sqrt(dmin)) * math.sqrt(float(np.sum(1.0 / g.degrees)))
    return FrobeniusBoundReport(eps, float(lhs), bound)


@dataclass
class UnbiasednessReport:
    trials: int
    samples: int
    distance: float
    mean_laplacian: np.ndarray


def monte_carlo_unbiasedness(
    g: Graph, T: int, M: int, trials: int, seed: int = 0, threads: int = 1, cap: int = ORACLE_CAP
) -> UnbiasednessReport:
    """Average ``trials`` sampled Laplacians and report relative Frobenius error to exact L."""
    _check_cap(g.n, cap)
    target = exact_L(g, uniform_alpha(T), cap)
    total = np.zeros((g.n, g.n))
    for t in range(trials):
        cfg = PipelineConfig(window=T, samples=M, seed=_trial_seed(seed, t), threads=threads)
        total += laplacian_of(build_sparsifier(g, cfg)).todense()
    mean = total / trials
    dist = float(np.linalg.norm(mean - target) / np.linalg.norm(target))
    return UnbiasednessReport(trials, M, dist, mean)


def _trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(trial,)).generate_state(1, np.uint64)[0])

