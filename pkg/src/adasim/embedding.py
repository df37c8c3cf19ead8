"""Node embeddings trained on walk corpora with hierarchical softmax.

Two objectives are available:

``"cbow"`` (default)
    predict each walk position from the mean of the vectors in a window of
    ``window`` positions on either side;
``"skipgram"``
    predict every window position from the vector of the centre node.

Either way the output layer is a Huffman tree over the vocabulary: the
probability of a token is the product of logistic decisions along its root to
leaf path, so one update touches ``O(log V)`` output vectors.
"""
from __future__ import annotations

import heapq
import os
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from .walks import Corpus

__all__ = [
    "TrainConfig",
    "HuffmanTree",
    "EmbeddingMatrix",
    "EmbeddingError",
    "EmbeddingParseError",
    "build_huffman",
    "train",
    "leaf_probability",
    "hs_loss_and_grad",
    "save_embeddings",
    "load_embeddings",
]

MAX_EXP = 6.0
EXP_TABLE_SIZE = 1024


class EmbeddingError(ValueError):
    pass


class EmbeddingParseError(EmbeddingError):
    def __init__(self, lineno: int, reason: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {reason}")


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 128
    window: int = 10
    epochs: int = 1
    alpha0: float = 0.025
    alpha_min: float = 1e-4
    seed: int = 0
    mode: str = "cbow"
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.epochs < 1:
            raise ValueError("dim, window and epochs must be >= 1")
        if not 0 < self.alpha_min <= self.alpha0:
            raise ValueError("need 0 < alpha_min <= alpha0")
        if self.mode not in ("cbow", "skipgram"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class HuffmanTree:
    """Binary prefix code over ``vocab`` leaves.

    ``codes[w, :lengths[w]]`` are the branch bits from the root to leaf ``w``
    and ``points[w, :lengths[w]]`` the internal nodes visited (row indices into
    the ``(vocab - 1, dim)`` output table). Internal node ``vocab - 2`` is the
    root.
    """

    codes: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    lengths: np.ndarray = field(repr=False)

    @property
    def vocab_size(self) -> int:
        return len(self.lengths)

    def code(self, w: int) -> list[int]:
        return self.codes[w, : self.lengths[w]].tolist()

    def path(self, w: int) -> list[int]:
        return self.points[w, : self.lengths[w]].tolist()


def build_huffman(frequencies) -> HuffmanTree:
    """Huffman code for the given per-token counts.

    Ties are broken by ``(count, id)`` where leaves keep their own id and the
    k-th merged node gets id ``vocab + k``, so the tree is reproducible. The
    smaller of the two merged nodes gets branch bit 0.
    """
    freq = np.asarray(frequencies, dtype=np.int64)
    V = len(freq)
    if V < 2:
        raise EmbeddingError(f"Huffman coding needs at least 2 symbols, got {V}")
    if np.any(freq < 1):
        raise EmbeddingError("all counts must be >= 1")
    heap = [(int(c), i) for i, c in enumerate(freq)]
    heapq.heapify(heap)
    parent = np.empty(2 * V - 1, dtype=np.int64)
    bit = np.zeros(2 * V - 1, dtype=np.int8)
    nxt = V
    while len(heap) > 1:
        c1, a = heapq.heappop(heap)
        c2, b = heapq.heappop(heap)
        parent[a] = parent[b] = nxt
        bit[b] = 1
        heapq.heappush(heap, (c1 + c2, nxt))
        nxt += 1
    root = 2 * V - 2
    depth = np.zeros(2 * V - 1, dtype=np.int64)
    for node in range(root - 1, -1, -1):
        depth[node] = depth[parent[node]] + 1
    maxlen = int(depth[:V].max())
    codes = np.zeros((V, maxlen), dtype=np.int8)
    points = np.zeros((V, maxlen), dtype=np.int64)
    for w in range(V):
        L = depth[w]
        node = w
        for i in range(L - 1, -1, -1):
            codes[w, i] = bit[node]
            node = parent[node]
            points[w, i] = node - V
    return HuffmanTree(codes, points, depth[:V].copy())


@dataclass
class EmbeddingMatrix:
    """``vectors[i]`` is the embedding of node ``i``; ``labels[i]`` its label.

    ``loss_curve`` holds the mean training loss over consecutive chunks of
    updates (empty for loaded matrices).
    """

    vectors: np.ndarray
    labels: tuple
    loss_curve: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        self.labels = tuple(str(x) for x in self.labels)
        if self.vectors.ndim != 2 or len(self.labels) != len(self.vectors):
            raise EmbeddingError("vectors must be (n, d) with one label per row")
        if not np.all(np.isfinite(self.vectors)):
            raise EmbeddingError("embedding contains non-finite values")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.vectors)

    def __getitem__(self, node):
        return self.vectors[node]


# -- hierarchical softmax pieces --------------------------------------------
def _exp_table() -> np.ndarray:
    x = (np.arange(EXP_TABLE_SIZE) / EXP_TABLE_SIZE * 2 - 1) * MAX_EXP
    return 1.0 / (1.0 + np.exp(-x))


@njit(cache=True)
def _sigmoid(f, table, exact):
    if exact:
        if f >= 0:
            return 1.0 / (1.0 + np.exp(-f))
        e = np.exp(f)
        return e / (1.0 + e)
    if f <= -MAX_EXP:
        f = -MAX_EXP
    elif f >= MAX_EXP:
        f = MAX_EXP
    i = int((f + MAX_EXP) * (EXP_TABLE_SIZE / MAX_EXP / 2))
    if i >= EXP_TABLE_SIZE:
        i = EXP_TABLE_SIZE - 1
    return table[i]


@njit(cache=True)
def _hs_update(x, syn1, points, codes, length, alpha, neu1e, table, exact):
    """One hierarchical-softmax step for input vector ``x``.

    Adds ``-alpha * dJ/dx`` into ``neu1e``, applies ``-alpha * dJ/dw`` to each
    output vector on the path, and returns ``J = -log Pr(target | x)`` (with
    the sigmoid as evaluated, i.e. clipped unless ``exact``).
    """
    dim = x.shape[0]
    loss = 0.0
    for j in range(length):
        row = points[j]
        f = 0.0
        for c in range(dim):
            f += x[c] * syn1[row, c]
        s = _sigmoid(f, table, exact)
        label = 1.0 - codes[j]
        p = s if label > 0.5 else 1.0 - s
        if p < 1e-300:
            p = 1e-300
        loss -= np.log(p)
        g = (label - s) * alpha
        for c in range(dim):
            neu1e[c] += g * syn1[row, c]
        for c in range(dim):
            syn1[row, c] += g * x[c]
    return loss


@njit(cache=True)
def _train_walks(walks, lengths, order, syn0, syn1, points, codes, codelens, window, cbow,
                 alpha0, alpha_min, total, done0, table, curve_sum, curve_cnt):
    dim = syn0.shape[1]
    bins = curve_sum.shape[0]
    neu1 = np.zeros(dim)
    neu1e = np.zeros(dim)
    done = done0
    for oi in range(order.shape[0]):
        w = order[oi]
        L = lengths[w]
        for i in range(L):
            alpha = alpha0 - (alpha0 - alpha_min) * done / total
            if alpha < alpha_min:
                alpha = alpha_min
            target = walks[w, i]
            lo = max(i - window, 0)
            hi = min(i + window, L - 1)
            cw = hi - lo
            if cw > 0:
                loss = 0.0
                for c in range(dim):
                    neu1e[c] = 0.0
                if cbow:
                    for c in range(dim):
                        neu1[c] = 0.0
                    for j in range(lo, hi + 1):
                        if j != i:
                            src = walks[w, j]
                            for c in range(dim):
                                neu1[c] += syn0[src, c]
                    for c in range(dim):
                        neu1[c] /= cw
                    loss = _hs_update(neu1, syn1, points[target], codes[target], codelens[target],
                                      alpha, neu1e, table, False)
                    # d(mean)/d(member) = 1/cw
                    for j in range(lo, hi + 1):
                        if j != i:
                            src = walks[w, j]
                            for c in range(dim):
                                syn0[src, c] += neu1e[c] / cw
                else:
                    for j in range(lo, hi + 1):
                        if j != i:
                            ctx = walks[w, j]
                            loss += _hs_update(syn0[target], syn1, points[ctx], codes[ctx], codelens[ctx],
                                               alpha, neu1e, table, False) / cw
                    for c in range(dim):
                        syn0[target, c] += neu1e[c]
                k = min(done * bins // total, bins - 1)
                curve_sum[k] += loss
                curve_cnt[k] += 1
            done += 1
    return done


@njit(cache=True, parallel=True)
def _train_hogwild(walks, lengths, chunks, offsets, syn0, syn1, points, codes, codelens, window, cbow,
                   alpha0, alpha_min, total, table, curve_sum, curve_cnt):
    for t in prange(len(chunks)):
        i = np.int64(t)
        _train_walks(walks, lengths, chunks[i], syn0, syn1, points, codes, codelens, window, cbow,
                     alpha0, alpha_min, total, offsets[i], table, curve_sum[i], curve_cnt[i])


def train(corpus: Corpus, cfg: TrainConfig = TrainConfig(), labels=None, curve_bins: int = 100) -> EmbeddingMatrix:
    """Fit one vector per token of ``corpus``.

    The learning rate decays linearly from ``alpha0`` to ``alpha_min`` over all
    trained positions (``epochs`` passes over the corpus, walks in corpus
    order). Input vectors start uniform in ``[-0.5/dim, 0.5/dim]``, output
    vectors at zero. Tokens that never occur keep their initial vector.

    With ``cfg.workers > 1`` walks are split across threads that update the
    shared tables without locking; results are then not reproducible.
    """
    if corpus.token_count == 0:
        raise EmbeddingError("corpus is empty")
    V = corpus.vocab_size
    freq = corpus.frequencies
    present = np.flatnonzero(freq > 0)
    if len(present) < 2:
        raise EmbeddingError("corpus must contain at least two distinct tokens")
    tree = build_huffman(freq[present])
    maxlen = tree.codes.shape[1]
    codes = np.zeros((V, maxlen), dtype=np.float64)
    points = np.zeros((V, maxlen), dtype=np.int64)
    codelens = np.zeros(V, dtype=np.int64)
    codes[present] = tree.codes
    points[present] = tree.points
    codelens[present] = tree.lengths

    rng = np.random.default_rng(cfg.seed)
    syn0 = (rng.random((V, cfg.dim)) - 0.5) / cfg.dim
    syn1 = np.zeros((len(present) - 1, cfg.dim))
    table = _exp_table()
    total = corpus.token_count * cfg.epochs
    cbow = cfg.mode == "cbow"
    order = np.arange(len(corpus), dtype=np.int64)
    curve_sum = np.zeros((cfg.workers, curve_bins))
    curve_cnt = np.zeros((cfg.workers, curve_bins))
    done = 0
    for _ in range(cfg.epochs):
        if cfg.workers == 1:
            done = _train_walks(corpus.walks, corpus.lengths, order, syn0, syn1, points, codes, codelens,
                                cfg.window, cbow, cfg.alpha0, cfg.alpha_min, total, done, table,
                                curve_sum[0], curve_cnt[0])
            continue
        chunks = np.array_split(order, cfg.workers)
        starts = np.concatenate([[0], np.cumsum(corpus.lengths)])
        offsets = np.array([done + starts[c[0]] if len(c) else done for c in chunks], dtype=np.int64)
        from numba.typed import List

        _train_hogwild(corpus.walks, corpus.lengths, List(chunks), offsets, syn0, syn1, points, codes,
                       codelens, cfg.window, cbow, cfg.alpha0, cfg.alpha_min, total, table,
                       curve_sum, curve_cnt)
        done += corpus.token_count
    if not np.all(np.isfinite(syn0)):
        raise EmbeddingError("training diverged: non-finite embedding values (lower alpha0)")
    if labels is None:
        labels = [str(i) for i in range(V)]
    cnt = curve_cnt.sum(axis=0)
    curve = np.where(cnt > 0, curve_sum.sum(axis=0) / np.maximum(cnt, 1), np.nan)
    return EmbeddingMatrix(syn0, tuple(labels), curve)


def leaf_probability(x, syn1, tree: HuffmanTree, w: int) -> float:
    """``Pr(w | x)`` under the tree, with the exact logistic function."""
    f = syn1[tree.path(w)] @ np.asarray(x, dtype=np.float64)
    sign = 1.0 - 2.0 * np.asarray(tree.code(w), dtype=np.float64)
    return float(np.prod(1.0 / (1.0 + np.exp(-sign * f))))


def hs_loss_and_grad(x, syn1, tree: HuffmanTree, w: int):
    """``-log Pr(w | x)`` and its gradients w.r.t. ``x`` and ``syn1``.

    Runs the training kernel's update with unit step and exact sigmoid on
    copies, so the returned gradient is exactly what training applies.
    """
    x = np.array(x, dtype=np.float64)
    syn1 = np.array(syn1, dtype=np.float64)
    before = syn1.copy()
    neu1e = np.zeros_like(x)
    pts = np.asarray(tree.points[w], dtype=np.int64)
    cds = np.asarray(tree.codes[w], dtype=np.float64)
    loss = _hs_update(x, syn1, pts, cds, int(tree.lengths[w]), 1.0, neu1e, _exp_table(), True)
    return loss, -neu1e, before - syn1


# -- text format -----------------------------------------------------------
def save_embeddings(emb: EmbeddingMatrix, path: str | os.PathLike | None = None) -> str | None:
    """word2vec text format: ``<count> <dim>`` header, then ``<label> v1 ... vd``."""
    lines = [f"{len(emb)} {emb.dim}"]
    for lab, vec in zip(emb.labels, emb.vectors):
        lines.append(lab + " " + " ".join(format(float(x), ".9g") for x in vec))
    text = "\n".join(lines) + "\n"
    if path is None:
        return text
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return None


def load_embeddings(source) -> EmbeddingMatrix:
    """Read the word2vec text format from a path or a string holding the file."""
    if isinstance(source, str) and "\n" in source:
        lines = source.splitlines()
    else:
        with open(source, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise EmbeddingParseError(1, "empty file")
    head = lines[0].split()
    if len(head) != 2:
        raise EmbeddingParseError(1, "header must be '<count> <dim>'")
    try:
        count, dim = int(head[0]), int(head[1])
    except ValueError:
        raise EmbeddingParseError(1, "header must hold two integers") from None
    if len(lines) - 1 != count:
        raise EmbeddingParseError(len(lines), f"header announces {count} vectors, found {len(lines) - 1}")
    labels = []
    vecs = np.empty((count, dim))
    for i, ln in enumerate(lines[1:], start=2):
        toks = ln.split()
        if len(toks) != dim + 1:
            raise EmbeddingParseError(i, f"expected {dim} values, got {len(toks) - 1}")
        labels.append(toks[0])
        try:
            vecs[i - 2] = [float(t) for t in toks[1:]]
        except ValueError:
            raise EmbeddingParseError(i, "non-numeric value") from None
    return EmbeddingMatrix(vecs, tuple(labels))
