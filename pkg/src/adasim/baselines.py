"""Comparison predictors: neighbourhood heuristics and edge-feature classifiers.

All heuristics are evaluated on the residual graph of a split, never on the
full graph, so removed edges cannot leak into the scores.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .graph import Graph, GraphError, clustering_coefficients

__all__ = [
    "HEURISTICS",
    "OPERATORS",
    "HeuristicIndex",
    "LogRegConfig",
    "LogRegModel",
    "CorrelationError",
    "heuristic_score",
    "heuristic_scores",
    "tune_hei_alpha",
    "edge_features",
    "train_logreg",
    "logreg_loss_and_grad",
    "pearson",
]

HEURISTICS = ("cn", "ra", "pa", "si", "cclp", "hei")
OPERATORS = ("hadamard", "average", "division", "weighted_l1", "weighted_l2")
DIVISION_EPS = 1e-12


@dataclass(frozen=True)
class HeuristicIndex:
    kind: str
    hei_alpha: float | None = None

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in HEURISTICS:
            raise ValueError(f"unknown heuristic {self.kind!r}; choose from {HEURISTICS}")
        if (kind == "hei") != (self.hei_alpha is not None):
            raise ValueError("hei_alpha is required for HEI and only for HEI")
        object.__setattr__(self, "kind", kind)


def _check_pairs(g: Graph, pairs) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.size and (pairs.min() < 0 or pairs.max() >= g.node_count):
        raise GraphError("pair references an invalid node id")
    if np.any(pairs[:, 0] == pairs[:, 1]):
        raise GraphError("pairs must join two distinct nodes")
    return pairs


def _common_weighted(g: Graph, pairs: np.ndarray, weights: np.ndarray | None) -> np.ndarray:
    # sum over common neighbours z of weights[z] (or 1), via sparse row products
    A = g.adjacency_matrix()
    both = A[pairs[:, 0]].multiply(A[pairs[:, 1]]).tocsr()
    if weights is None:
        return np.asarray(both.sum(axis=1)).ravel()
    return both @ weights


def heuristic_scores(g: Graph, index: HeuristicIndex | str, pairs, hei_alpha: float | None = None) -> np.ndarray:
    """Vectorised heuristic scores for an ``(m, 2)`` array of pairs."""
    if isinstance(index, str):
        index = HeuristicIndex(index, hei_alpha if index.lower() == "hei" else None)
    pairs = _check_pairs(g, pairs)
    if len(pairs) == 0:
        return np.empty(0)
    k = g.degrees.astype(np.float64)
    ku, kv = k[pairs[:, 0]], k[pairs[:, 1]]
    kind = index.kind
    if kind == "cn":
        return _common_weighted(g, pairs, None)
    if kind == "ra":
        inv = np.zeros_like(k)
        np.divide(1.0, k, out=inv, where=k > 0)
        return _common_weighted(g, pairs, inv)
    if kind == "pa":
        return ku * kv
    if kind == "si":
        cn = _common_weighted(g, pairs, None)
        denom = np.sqrt(ku * kv)
        out = np.zeros(len(pairs))
        np.divide(cn, denom, out=out, where=denom > 0)
        return out
    if kind == "cclp":
        return _common_weighted(g, pairs, clustering_coefficients(g))
    diff = np.abs(ku - kv)
    out = np.zeros(len(pairs))
    nz = diff > 0
    # degree gaps are small integers: evaluate libm pow once per distinct gap
    gaps, inv = np.unique(diff[nz], return_inverse=True)
    out[nz] = np.array([math.pow(x, index.hei_alpha) for x in gaps.tolist()])[inv]
    return out


def heuristic_score(g: Graph, index: HeuristicIndex | str, u: int, v: int, hei_alpha: float | None = None) -> float:
    g.check_node(u)
    g.check_node(v)
    return float(heuristic_scores(g, index, [[u, v]], hei_alpha)[0])


def tune_hei_alpha(g: Graph, pairs, labels, grid=None) -> float:
    """Exponent with the best training AUC; ties go to the smallest ``|alpha|``."""
    from .evaluation import auc

    if grid is None:
        grid = np.round(np.arange(-20, 21) / 10.0, 10)
    grid = sorted(np.asarray(grid, dtype=np.float64), key=lambda a: (abs(a), a))
    best_alpha, best_auc = None, -np.inf
    for alpha in grid:
        a = auc(heuristic_scores(g, "hei", pairs, float(alpha)), labels)
        if a > best_auc + 1e-12:
            best_alpha, best_auc = float(alpha), a
    return best_alpha


def edge_features(emb, u, v=None, operator: str = "hadamard", *, return_flags: bool = False):
    """Binary operator applied to the vectors of ``u`` and ``v``.

    ``u`` and ``v`` may be node ids or arrays of ids (or pass an ``(m, 2)``
    pair array as ``u`` with ``v=None``). For ``division``, denominator entries
    smaller than 1e-12 in magnitude are replaced by ``±1e-12``; with
    ``return_flags`` a boolean per row marks where that happened.
    """
    X = np.asarray(getattr(emb, "vectors", emb), dtype=np.float64)
    if v is None:
        pairs = np.asarray(u, dtype=np.int64).reshape(-1, 2)
        fu, fv = X[pairs[:, 0]], X[pairs[:, 1]]
    else:
        fu, fv = X[u], X[v]
    flags = np.zeros(fu.shape[:-1], dtype=bool)
    if operator == "hadamard":
        out = fu * fv
    elif operator == "average":
        out = (fu + fv) / 2.0
    elif operator == "division":
        small = np.abs(fv) < DIVISION_EPS
        denom = np.where(small, np.where(fv < 0, -DIVISION_EPS, DIVISION_EPS), fv)
        out = fu / denom
        flags = small.any(axis=-1)
    elif operator == "weighted_l1":
        out = np.abs(fu - fv)
    elif operator == "weighted_l2":
        out = (fu - fv) ** 2
    else:
        raise ValueError(f"unknown operator {operator!r}; choose from {OPERATORS}")
    return (out, flags) if return_flags else out


# -- logistic regression ----------------------------------------------------
@dataclass(frozen=True)
class LogRegConfig:
    learning_rate: float = 0.5
    epochs: int = 300
    l2: float = 1e-3
    standardize: bool = True


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    config: LogRegConfig = field(default_factory=LogRegConfig)
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None

    def _prep(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.weights):
            raise ValueError(f"expected {len(self.weights)} features, got shape {X.shape}")
        if self.mean is not None:
            X = (X - self.mean) / self.scale
        return X

    def decision_function(self, X) -> np.ndarray:
        return self._prep(X) @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision_function(X))


def logreg_loss_and_grad(w, b, X, y, l2):
    """Mean log-loss plus ``l2/2 |w|^2`` and its gradient."""
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * w @ w)
    r = expit(z) - y
    return loss, X.T @ r / len(y) + l2 * w, float(r.mean())


def train_logreg(features, labels, cfg: LogRegConfig = LogRegConfig()) -> LogRegModel:
    """Full-batch gradient descent from zero weights.

    Features are z-scored with training statistics when ``cfg.standardize``
    (constant columns keep scale 1).
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError(f"features {X.shape} do not match {len(y)} labels")
    if not (np.any(y == 1) and np.any(y == 0)):
        raise ValueError("need at least one sample of each class")
    mean = scale = None
    if cfg.standardize:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale < 1e-12] = 1.0
        X = (X - mean) / scale
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(cfg.epochs):
        _, gw, gb = logreg_loss_and_grad(w, b, X, y, cfg.l2)
        w -= cfg.learning_rate * gw
        b -= cfg.learning_rate * gb
    if not (np.all(np.isfinite(w)) and math.isfinite(b)):
        raise ValueError("logistic regression diverged")
    return LogRegModel(w, b, cfg, mean, scale)


# -- correlation ------------------------------------------------------------
class CorrelationError(ValueError):
    pass


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise CorrelationError("need two equal-length sequences of at least 2 values")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = dx @ dx, dy @ dy
    if sxx == 0 or syy == 0:
        raise CorrelationError("correlation undefined for a constant sequence")
    r = float(dx @ dy / math.sqrt(sxx * syy))
    return max(-1.0, min(1.0, r))
