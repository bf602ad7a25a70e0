"""Multi-label vertex classification with one-vs-rest logistic regression.

Protocol: random train/test split of labeled vertices, one binary
classifier per label, and at test time each vertex receives its ``k``
best-scoring labels where ``k`` is its true label count. Scores are
Micro-F1 and Macro-F1, averaged over repeated splits.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import GraphFormatError, _open_lines

CONSTANT_SCORE = 1e9


class ConvergenceWarning(UserWarning):
    pass


@dataclass
class LabelTable:
    """Label sets keyed by dense vertex id; labels are dense in ``[0, num_labels)``."""

    labels: dict[int, frozenset[int]]
    num_labels: int
    label_ids: np.ndarray | None = None

    def __post_init__(self):
        for v, ls in self.labels.items():
            if any(not 0 <= x < self.num_labels for x in ls):
                raise ValueError(f"vertex {v} has a label outside [0, {self.num_labels})")

    @classmethod
    def from_pairs(cls, pairs, num_labels: int | None = None) -> "LabelTable":
        out: dict[int, set[int]] = {}
        for v, lab in pairs:
            out.setdefault(int(v), set()).add(int(lab))
        if num_labels is None:
            num_labels = 1 + max((max(s) for s in out.values()), default=-1)
        return cls({v: frozenset(s) for v, s in out.items()}, num_labels)

    def vertices(self) -> np.ndarray:
        return np.array(sorted(v for v, s in self.labels.items() if s), dtype=np.int64)

    def indicator(self, ids) -> np.ndarray:
        y = np.zeros((len(ids), self.num_labels), dtype=bool)
        for i, v in enumerate(ids):
            y[i, list(self.labels[int(v)])] = True
        return y


def read_labels(source, raw_ids: np.ndarray | None = None) -> LabelTable:
    """Parse ``vertex_raw_id label_id`` lines.

    Raw vertex ids are translated through ``raw_ids`` (dense -> raw); label
    ids are densified in ascending order and kept in ``label_ids``.
    """
    lookup = None if raw_ids is None else {int(r): i for i, r in enumerate(raw_ids)}
    pairs = []
    for lineno, raw in enumerate(_open_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError("label lines are 'vertex_raw_id label_id'", lineno)
        try:
            v, lab = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"malformed line {line!r}", lineno) from None
        if lookup is not None:
            if v not in lookup:
                raise GraphFormatError(f"vertex {v} is not in the graph", lineno)
            v = lookup[v]
        pairs.append((v, lab))
    label_ids = np.unique([lab for _, lab in pairs])
    dense = {int(x): i for i, x in enumerate(label_ids)}
    table = LabelTable.from_pairs([(v, dense[lab]) for v, lab in pairs], len(label_ids))
    table.label_ids = label_ids
    return table


def split(labels: LabelTable, train_ratio: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0 < train_ratio < 1:
        raise ValueError("train_ratio must lie in (0, 1)")
    ids = labels.vertices()
    n_train = int(math.floor(train_ratio * len(ids) + 0.5))
    if n_train == 0 or n_train == len(ids):
        raise ValueError(f"ratio {train_ratio} leaves an empty side with {len(ids)} labeled vertices")
    perm = np.random.default_rng(seed).permutation(ids)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


@dataclass
class OvrModel:
    weights: np.ndarray  # (num_labels, d)
    bias: np.ndarray
    reg: float
    constant: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))
    converged: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))

    def scores(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) @ self.weights.T + self.bias


def _fit_binary(x: np.ndarray, y: np.ndarray, reg: float, tol: float, max_iter: int):
    """Full-batch gradient descent with Armijo backtracking.

    Minimizes ``sum log(1 + exp(-s (x.w + b))) + reg/2 |w|^2`` with
    ``s = +-1``. Trial steps start from the Barzilai-Borwein estimate.
    """
    s = np.where(y, 1.0, -1.0)
    d = x.shape[1]
    theta = np.zeros(d + 1)
    xb = np.hstack([x, np.ones((len(x), 1))])
    pen = np.full(d + 1, reg)
    pen[-1] = 0.0

    def f_and_grad(t):
        margin = s * (xb @ t)
        loss = np.logaddexp(0.0, -margin).sum() + 0.5 * np.sum(pen * t * t)
        coef = -s * np.exp(-np.logaddexp(0.0, margin))
        return loss, xb.T @ coef + pen * t

    f, grad = f_and_grad(theta)
    step = 1.0 / (0.25 * np.sum(xb * xb) + reg + 1e-12)
    prev_t = prev_g = None
    for _ in range(max_iter):
        if np.linalg.norm(grad) <= tol:
            return theta, True
        if prev_t is not None:
            dt, dg = theta - prev_t, grad - prev_g
            curv = dt @ dg
            if curv > 0:
                step = (dt @ dt) / curv
        gg = grad @ grad
        while True:
            cand = theta - step * grad
            fc, gc = f_and_grad(cand)
            if fc <= f - 1e-4 * step * gg or step < 1e-300:
                break
            step *= 0.5
        prev_t, prev_g = theta, grad
        theta, f, grad = cand, fc, gc
    return theta, np.linalg.norm(grad) <= tol


def train_ovr(
    emb: np.ndarray,
    labels: LabelTable,
    train_ids,
    reg: float = 1.0,
    tol: float = 1e-6,
    max_iter: int = 5000,
) -> OvrModel:
    """Fit one L2-regularized logistic regression per label on ``train_ids``.

    A label with no positive (or no negative) training rows gets a constant
    scorer with bias ``-CONSTANT_SCORE`` (or ``+CONSTANT_SCORE``), flagged in
    ``constant``.
    """
    train_ids = np.asarray(train_ids, dtype=np.int64)
    if len(train_ids) == 0:
        raise ValueError("no training vertices")
    if reg < 0:
        raise ValueError("reg must be nonnegative")
    x = np.asarray(emb, dtype=np.float64)[train_ids]
    y = labels.indicator(train_ids)
    L, d = labels.num_labels, x.shape[1]
    w = np.zeros((L, d))
    b = np.zeros(L)
    constant = np.zeros(L, bool)
    converged = np.ones(L, bool)
    for j in range(L):
        pos = int(y[:, j].sum())
        if pos == 0 or pos == len(y):
            constant[j] = True
            b[j] = CONSTANT_SCORE if pos else -CONSTANT_SCORE
            continue
        theta, ok = _fit_binary(x, y[:, j], reg, tol, max_iter)
        w[j], b[j] = theta[:-1], theta[-1]
        converged[j] = ok
    if not converged.all():
        warnings.warn(
            f"{int((~converged).sum())} label classifier(s) hit the iteration cap",
            ConvergenceWarning,
            stacklevel=2,
        )
    return OvrModel(w, b, reg, constant, converged)


def predict_topk(model: OvrModel, row: np.ndarray, k: int) -> frozenset[int]:
    """Labels with the ``k`` highest scores; ties go to the lower label id."""
    return topk_from_scores(model.scores(np.asarray(row)[None, :])[0], k)


def topk_from_scores(scores: np.ndarray, k: int) -> frozenset[int]:
    if k < 0:
        raise ValueError("k must be nonnegative")
    order = np.argsort(-np.asarray(scores), kind="stable")
    return frozenset(int(i) for i in order[:k])


def micro_macro_f1(pred: Sequence[frozenset], truth: Sequence[frozenset]) -> tuple[float, float]:
    if len(pred) != len(truth):
        raise ValueError("prediction and truth cover different vertex counts")
    tp: dict[int, int] = {}
    fp: dict[int, int] = {}
    fn: dict[int, int] = {}
    for p, t in zip(pred, truth):
        p, t = set(p), set(t)
        for lab in p & t:
            tp[lab] = tp.get(lab, 0) + 1
        for lab in p - t:
            fp[lab] = fp.get(lab, 0) + 1
        for lab in t - p:
            fn[lab] = fn.get(lab, 0) + 1
    TP, FP, FN = sum(tp.values()), sum(fp.values()), sum(fn.values())
    micro = 2 * TP / (2 * TP + FP + FN) if TP else 0.0
    present = sorted(set().union(*map(set, truth))) if truth else []
    per_label = []
    for lab in present:
        t_, f_p, f_n = tp.get(lab, 0), fp.get(lab, 0), fn.get(lab, 0)
        per_label.append(2 * t_ / (2 * t_ + f_p + f_n) if t_ else 0.0)
    macro = float(np.mean(per_label)) if per_label else 0.0
    return float(micro), macro


@dataclass
class RatioResult:
    ratio: float
    micro_mean: float
    micro_std: float
    macro_mean: float
    macro_std: float
    micro: list[float]
    macro: list[float]


@dataclass
class EvaluationReport:
    results: list[RatioResult]

    def table(self) -> str:
        lines = ["ratio\tmicro_mean\tmicro_std\tmacro_mean\tmacro_std"]
        for r in self.results:
            lines.append(
                f"{r.ratio:g}\t{r.micro_mean:.6f}\t{r.micro_std:.6f}\t{r.macro_mean:.6f}\t{r.macro_std:.6f}"
            )
        return "\n".join(lines)


def evaluate_split(emb, labels: LabelTable, train, test, reg: float = 1.0) -> tuple[float, float]:
    model = train_ovr(emb, labels, train, reg)
    scores = model.scores(np.asarray(emb)[test])
    truth = [labels.labels[int(v)] for v in test]
    pred = [topk_from_scores(s, len(t)) for s, t in zip(scores, truth)]
    return micro_macro_f1(pred, truth)


def evaluate(
    emb, labels: LabelTable, ratios: Sequence[float], repeats: int = 10, seed: int = 0, reg: float = 1.0
) -> EvaluationReport:
    """Mean and standard deviation of Micro/Macro-F1 over ``repeats`` splits per ratio."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    results = []
    for i, ratio in enumerate(ratios):
        mic, mac = [], []
        for rep in range(repeats):
            split_seed = np.random.SeedSequence(seed, spawn_key=(i, rep))
            train, test = split(labels, ratio, split_seed)
            a, b = evaluate_split(emb, labels, train, test, reg)
            mic.append(a)
            mac.append(b)
        results.append(
            RatioResult(float(ratio), float(np.mean(mic)), float(np.std(mic)), float(np.mean(mac)), float(np.std(mac)), mic, mac)
        )
    return EvaluationReport(results)
