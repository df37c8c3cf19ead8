"""Random-walk corpora over a :class:`~adasim.graph.Graph`.

Every walk draws from its own random stream, derived by hashing
``(seed, pass, root)``, so the corpus does not depend on how walks are
scheduled. Within a pass the roots are visited in a seeded permutation of the
node set.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .graph import Graph, GraphError

__all__ = [
    "WalkConfig",
    "Corpus",
    "CorpusError",
    "random_walks",
    "biased_walks",
    "generate_walks",
    "derive_edge_sequences",
    "save_corpus",
    "load_corpus",
]


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 80
    seed: int = 0
    return_p: float | None = None
    inout_q: float | None = None

    def __post_init__(self):
        if self.walks_per_node < 1 or self.walk_length < 1:
            raise ValueError("walks_per_node and walk_length must be >= 1")
        if (self.return_p is None) != (self.inout_q is None):
            raise ValueError("return_p and inout_q must be given together")
        if self.return_p is not None and not (self.return_p > 0 and self.inout_q > 0):
            raise ValueError("return_p and inout_q must be positive")

    @property
    def biased(self) -> bool:
        return self.return_p is not None


@dataclass(frozen=True)
class Corpus:
    """Padded walk matrix: row ``i`` holds ``walks[i, :lengths[i]]``; padding is -1.

    ``vocab_size`` is the number of distinct token ids that may occur (node
    count for node walks, edge count for edge walks).
    """

    walks: np.ndarray = field(repr=False)
    lengths: np.ndarray = field(repr=False)
    vocab_size: int

    def __len__(self) -> int:
        return len(self.lengths)

    @property
    def sequences(self) -> list[np.ndarray]:
        return [self.walks[i, : self.lengths[i]] for i in range(len(self.lengths))]

    def __iter__(self):
        return iter(self.sequences)

    @property
    def frequencies(self) -> np.ndarray:
        tokens = self.walks[self.walks >= 0]
        return np.bincount(tokens, minlength=self.vocab_size)

    @property
    def token_count(self) -> int:
        return int(self.lengths.sum())

    @classmethod
    def from_sequences(cls, seqs, vocab_size: int | None = None) -> "Corpus":
        seqs = [np.asarray(s, dtype=np.int64) for s in seqs]
        width = max((len(s) for s in seqs), default=0)
        walks = np.full((len(seqs), width), -1, dtype=np.int64)
        for i, s in enumerate(seqs):
            walks[i, : len(s)] = s
        if vocab_size is None:
            vocab_size = int(walks.max()) + 1 if walks.size else 0
        return cls(walks, np.array([len(s) for s in seqs], dtype=np.int64), vocab_size)


# -- counter-based random streams -------------------------------------------
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@njit(cache=True)
def _mix64(x):
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@njit(cache=True)
def _stream_state(seed, pass_idx, root):
    s = _mix64(np.uint64(seed) + _GOLDEN)
    s = _mix64(s ^ (np.uint64(pass_idx) + _GOLDEN))
    return _mix64(s ^ (np.uint64(root) + _GOLDEN))


@njit(cache=True)
def _next_uniform(state):
    # splitmix64 step; returns (new_state, uniform in [0, 1))
    state = state + _GOLDEN
    z = _mix64(state)
    return state, np.float64(z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _uniform_walk_kernel(indptr, indices, roots, pass_idx, seed, length, out, lengths, row0):
    for w in range(roots.shape[0]):
        root = roots[w]
        state = _stream_state(seed, pass_idx, root)
        row = row0 + w
        cur = root
        out[row, 0] = cur
        n = 1
        while n < length:
            lo = indptr[cur]
            deg = indptr[cur + 1] - lo
            if deg == 0:
                break
            state, u = _next_uniform(state)
            j = np.int64(u * deg)
            if j >= deg:
                j = deg - 1
            cur = indices[lo + j]
            out[row, n] = cur
            n += 1
        lengths[row] = n


@njit(cache=True)
def _is_adjacent(indptr, indices, a, b):
    lo = indptr[a]
    hi = indptr[a + 1]
    while lo < hi:
        mid = (lo + hi) >> 1
        x = indices[mid]
        if x == b:
            return True
        if x < b:
            lo = mid + 1
        else:
            hi = mid
    return False


@njit(cache=True)
def _biased_walk_kernel(indptr, indices, roots, pass_idx, seed, length, inv_p, inv_q, out, lengths, row0):
    maxdeg = 0
    for v in range(indptr.shape[0] - 1):
        d = indptr[v + 1] - indptr[v]
        if d > maxdeg:
            maxdeg = d
    weights = np.empty(maxdeg, dtype=np.float64)
    for w in range(roots.shape[0]):
        root = roots[w]
        state = _stream_state(seed, pass_idx, root)
        row = row0 + w
        prev = -1
        cur = root
        out[row, 0] = cur
        n = 1
        while n < length:
            lo = indptr[cur]
            deg = indptr[cur + 1] - lo
            if deg == 0:
                break
            total = 0.0
            for j in range(deg):
                x = indices[lo + j]
                if prev < 0:
                    wt = 1.0
                elif x == prev:
                    wt = inv_p
                elif _is_adjacent(indptr, indices, prev, x):
                    wt = 1.0
                else:
                    wt = inv_q
                total += wt
                weights[j] = total
            state, u = _next_uniform(state)
            target = u * total
            j = 0
            while j < deg - 1 and weights[j] <= target:
                j += 1
            prev = cur
            cur = indices[lo + j]
            out[row, n] = cur
            n += 1
        lengths[row] = n


def transition_probabilities(g: Graph, prev: int | None, cur: int, return_p: float = 1.0, inout_q: float = 1.0):
    """Next-step distribution of the second-order walk at ``cur`` coming from ``prev``.

    Returns ``(neighbors, probabilities)``. With ``prev=None`` (first step) the
    step is uniform.
    """
    nb = g.neighbors(cur)
    if prev is None:
        w = np.ones(len(nb))
    else:
        prev_nb = g.neighbors(prev)
        w = np.where(nb == prev, 1.0 / return_p, np.where(np.isin(nb, prev_nb), 1.0, 1.0 / inout_q))
    return nb, w / w.sum()


def _pass_roots(n: int, seed: int, pass_idx: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, pass_idx]))
    return rng.permutation(n).astype(np.int64)


def generate_walks(g: Graph, cfg: WalkConfig) -> Corpus:
    """Uniform or second-order walks depending on ``cfg.biased``."""
    if g.node_count == 0:
        raise GraphError("cannot walk on an empty graph")
    n, L = g.node_count, cfg.walk_length
    walks = np.full((cfg.walks_per_node * n, L), -1, dtype=np.int64)
    lengths = np.zeros(cfg.walks_per_node * n, dtype=np.int64)
    seed = np.uint64(cfg.seed % (1 << 64))
    for p in range(cfg.walks_per_node):
        roots = _pass_roots(n, cfg.seed, p)
        if cfg.biased:
            _biased_walk_kernel(
                g.indptr, g.indices, roots, np.uint64(p), seed, L,
                1.0 / cfg.return_p, 1.0 / cfg.inout_q, walks, lengths, p * n,
            )
        else:
            _uniform_walk_kernel(g.indptr, g.indices, roots, np.uint64(p), seed, L, walks, lengths, p * n)
    return Corpus(walks, lengths, n)


def random_walks(g: Graph, cfg: WalkConfig) -> Corpus:
    """``walks_per_node`` passes of uniform random walks of up to ``walk_length`` nodes."""
    if cfg.biased:
        raise ValueError("random_walks takes an unbiased WalkConfig; use biased_walks")
    return generate_walks(g, cfg)


def biased_walks(g: Graph, cfg: WalkConfig) -> Corpus:
    """Second-order (return/in-out biased) walks."""
    if not cfg.biased:
        raise ValueError("biased_walks needs return_p and inout_q")
    return generate_walks(g, cfg)


def derive_edge_sequences(corpus: Corpus, g: Graph) -> Corpus:
    """Map every node walk to the walk over the edges it traverses.

    Edge tokens are row indices into ``g.edges()``. A node walk of length m
    gives an edge walk of length m - 1.
    """
    n = g.node_count
    keys = g.edge_keys()
    W, lens = corpus.walks, corpus.lengths
    width = max(W.shape[1] - 1, 0)
    out = np.full((len(lens), width), -1, dtype=np.int64)
    if width == 0:
        return Corpus(out, np.zeros(len(lens), np.int64), g.edge_count)
    a, b = W[:, :-1], W[:, 1:]
    valid = np.arange(width)[None, :] < (lens - 1)[:, None]
    q = np.minimum(a, b) * n + np.maximum(a, b)
    qv = q[valid]
    pos = np.searchsorted(keys, qv)
    ok = pos < len(keys)
    ok[ok] = keys[pos[ok]] == qv[ok]
    if not ok.all():
        i, j = np.argwhere(valid)[np.flatnonzero(~ok)[0]]
        raise CorpusError(f"walk {i} steps between non-adjacent nodes {W[i, j]} and {W[i, j + 1]}")
    out[valid] = pos
    return Corpus(out, np.maximum(lens - 1, 0), g.edge_count)


def save_corpus(corpus: Corpus, path: str | os.PathLike, labels) -> None:
    """One walk per line, tokens written as their labels."""
    with open(path, "w", encoding="utf-8") as fh:
        for seq in corpus.sequences:
            fh.write(" ".join(labels[t] for t in seq.tolist()))
            fh.write("\n")


def load_corpus(path: str | os.PathLike, g: Graph) -> Corpus:
    seqs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            toks = line.split()
            if toks:
                seqs.append([g.node_id(t) for t in toks])
    return Corpus.from_sequences(seqs, g.node_count)
