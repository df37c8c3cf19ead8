"""Adaptive similarity: cosine similarity shifted by one learned penalty.

For node vectors ``u`` and ``v`` with ``a = u.v`` and ``b = |u||v|`` the
score is ``(a + p) / b``. ``p = 0`` is plain cosine similarity. The penalty is
fitted by minimising the mean logistic cross-entropy of
``sigmoid((a + p) / b)`` against the pair labels, which is convex in ``p``.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit

__all__ = [
    "PairFeatures",
    "AdaSimModel",
    "SGDConfig",
    "DegenerateVectorError",
    "TrainingError",
    "pair_features",
    "score",
    "predict_prob",
    "loss",
    "loss_gradient",
    "train_penalty",
    "save_model",
    "load_model",
    "save_trace",
]

EPS = 1e-12


class DegenerateVectorError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class PairFeatures:
    """Dot products ``a`` and norm products ``b`` of a batch of node pairs."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=np.float64))
        b = np.atleast_1d(np.asarray(self.b, dtype=np.float64))
        if a.shape != b.shape:
            raise ValueError("a and b must have the same shape")
        if np.any(b <= 0):
            raise DegenerateVectorError("norm product must be positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def __len__(self) -> int:
        return len(self.a)

    def __getitem__(self, idx) -> "PairFeatures":
        return PairFeatures(self.a[idx], self.b[idx])

    @property
    def cosine(self) -> np.ndarray:
        return self.a / self.b


def pair_features(emb, pairs, v=None, *, allow_zero: bool = False) -> PairFeatures:
    """Features of node pairs from an embedding.

    Call as ``pair_features(emb, pairs)`` with an ``(m, 2)`` id array, or
    ``pair_features(emb, u, v)`` for a single pair. ``emb`` is an
    :class:`~adasim.embedding.EmbeddingMatrix` or a plain ``(n, d)`` array.
    Zero vectors raise :class:`DegenerateVectorError` unless ``allow_zero``,
    in which case their norm is taken as 1e-12.
    """
    X = getattr(emb, "vectors", emb)
    X = np.asarray(X, dtype=np.float64)
    if v is not None:
        pairs = [[pairs, v]]
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    U, W = X[pairs[:, 0]], X[pairs[:, 1]]
    a = np.einsum("ij,ij->i", U, W)
    nu = np.linalg.norm(U, axis=1)
    nw = np.linalg.norm(W, axis=1)
    if np.any(nu == 0) or np.any(nw == 0):
        if not allow_zero:
            bad = pairs[(nu == 0) | (nw == 0)][0]
            raise DegenerateVectorError(f"zero-norm embedding in pair ({bad[0]}, {bad[1]})")
        nu = np.where(nu == 0, EPS, nu)
        nw = np.where(nw == 0, EPS, nw)
    return PairFeatures(a, nu * nw)


@dataclass(frozen=True)
class SGDConfig:
    """Optimiser settings for :func:`train_penalty`.

    ``method="newton"`` (default) takes safeguarded Newton steps on the
    full-batch loss. ``"gd"`` is plain full-batch gradient descent with step
    ``learning_rate``; ``"sgd"`` uses shuffled mini-batches of ``batch_size``.
    Training stops after ``epochs`` iterations or once ``|delta p| < tol``.
    """

    learning_rate: float = 0.1
    epochs: int = 500
    tol: float = 1e-8
    method: str = "newton"
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("newton", "gd", "sgd"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.epochs < 1 or self.learning_rate <= 0:
            raise ValueError("epochs and learning_rate must be positive")


@dataclass
class AdaSimModel:
    penalty: float = 0.0
    losses: list = field(default_factory=list)
    config: SGDConfig = field(default_factory=SGDConfig)
    converged: bool = False

    def __post_init__(self):
        if not math.isfinite(self.penalty):
            raise ValueError("penalty must be finite")

    def score(self, pf: PairFeatures) -> np.ndarray:
        return score(self, pf)

    def predict_prob(self, pf: PairFeatures) -> np.ndarray:
        return predict_prob(self, pf)

    @property
    def trace(self) -> list:
        return self.losses


def _penalty(model) -> float:
    return float(getattr(model, "penalty", model))


def score(model, pf: PairFeatures):
    """``(a + p) / b``; accepts a model or a bare penalty value."""
    return (pf.a + _penalty(model)) / pf.b


def predict_prob(model, pf: PairFeatures):
    return expit(score(model, pf))


def loss(pf: PairFeatures, labels, p: float) -> float:
    """Mean cross-entropy of ``sigmoid((a + p) / b)``; probabilities clamped to ``[1e-12, 1 - 1e-12]``."""
    y = np.asarray(labels, dtype=np.float64)
    z = (pf.a + p) / pf.b
    log_p = np.maximum(log_expit(z), math.log(EPS))
    log_q = np.maximum(log_expit(-z), math.log(EPS))
    return float(-np.mean(y * log_p + (1.0 - y) * log_q))


def loss_gradient(pf: PairFeatures, labels, p: float) -> float:
    """``dC/dp = mean((yhat - y) / b)``.

    This is the derivative of the unclamped loss; it agrees with :func:`loss`
    wherever no probability hits the 1e-12 clamp.
    """
    y = np.asarray(labels, dtype=np.float64)
    yhat = expit((pf.a + p) / pf.b)
    return float(np.mean((yhat - y) / pf.b))


def _curvature(pf: PairFeatures, p: float) -> float:
    yhat = expit((pf.a + p) / pf.b)
    return float(np.mean(yhat * (1.0 - yhat) / pf.b**2))


def train_penalty(pf: PairFeatures, labels, cfg: SGDConfig = SGDConfig()) -> AdaSimModel:
    """Fit ``p`` from labelled pair features, starting at ``p = 0``.

    Single-class data has no finite optimum; ``p`` then keeps moving in the
    descent direction until ``epochs`` runs out. The iteration targets the
    stationary point of the smooth cross-entropy. With very few examples of one
    class the 1e-12 clamp can create lower plateaus far away (the capped cost of
    the rare class stops growing); those are not sought.
    """
    y = np.asarray(labels, dtype=np.float64)
    if len(y) == 0 or len(y) != len(pf):
        raise ValueError("need one label per pair and at least one pair")
    p = 0.0
    losses = [loss(pf, y, p)]
    converged = False
    rng = np.random.default_rng(cfg.seed)
    # gradient magnitudes scale like 1/b, so bound Newton steps by the data scale
    max_step = 10.0 * float(np.max(pf.b)) + 1.0
    for _ in range(cfg.epochs):
        if cfg.method == "newton":
            grad = loss_gradient(pf, y, p)
            h = _curvature(pf, p)
            step = grad / h if h > 0 else np.sign(grad) * max_step
            step = float(np.clip(step, -max_step, max_step))
            c0 = losses[-1]
            new_p = p - step
            # halve until the loss does not increase
            for _ in range(60):
                if loss(pf, y, new_p) <= c0:
                    break
                step *= 0.5
                new_p = p - step
            else:
                new_p = p
        elif cfg.method == "gd":
            new_p = p - cfg.learning_rate * loss_gradient(pf, y, p)
        else:
            new_p = p
            idx = rng.permutation(len(y))
            for s in range(0, len(y), cfg.batch_size):
                bi = idx[s : s + cfg.batch_size]
                new_p -= cfg.learning_rate * loss_gradient(pf[bi], y[bi], new_p)
        delta = new_p - p
        p = new_p
        c = loss(pf, y, p)
        if not (math.isfinite(c) and math.isfinite(p)):
            raise TrainingError(f"loss became non-finite at p={p!r}; lower the learning rate")
        losses.append(c)
        if abs(delta) < cfg.tol:
            converged = True
            break
    return AdaSimModel(penalty=p, losses=losses, config=cfg, converged=converged)


# -- persistence -----------------------------------------------------------
def save_model(model: AdaSimModel, path: str | os.PathLike) -> None:
    cfg = model.config
    lines = [
        f"p={model.penalty!r}",
        f"method={cfg.method}",
        f"learning_rate={cfg.learning_rate!r}",
        f"epochs={cfg.epochs}",
        f"tol={cfg.tol!r}",
        f"iterations={len(model.losses) - 1}",
        f"converged={model.converged}",
        f"final_loss={model.losses[-1]!r}" if model.losses else "final_loss=nan",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path: str | os.PathLike) -> AdaSimModel:
    meta = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and "=" in line:
                k, v = line.split("=", 1)
                meta[k.strip()] = v.strip()
    if "p" not in meta:
        raise ValueError(f"{path}: no 'p=' record")
    cfg = SGDConfig(
        learning_rate=float(meta.get("learning_rate", 0.1)),
        epochs=int(meta.get("epochs", 500)),
        tol=float(meta.get("tol", 1e-8)),
        method=meta.get("method", "newton"),
    )
    return AdaSimModel(penalty=float(meta["p"]), config=cfg, converged=meta.get("converged") == "True")


def save_trace(model: AdaSimModel, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,loss\n")
        for i, c in enumerate(model.losses):
            fh.write(f"{i},{c!r}\n")
