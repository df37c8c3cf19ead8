"""Positive/negative pair sampling, k-fold plans and graph sparsification.

Positive pairs are edges removed from the graph; edges of a spanning forest
are never removed, so every connected component of the input stays connected
in the residual graph. Negative pairs are uniformly sampled non-edges.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .graph import Graph, GraphError, load_edge_list, spanning_forest, write_edge_list

__all__ = [
    "LabeledPair",
    "SplitResult",
    "FoldPlan",
    "SplitError",
    "InfeasibleRatioError",
    "generate_split",
    "max_feasible_ratio",
    "sample_negatives",
    "k_fold",
    "holdout",
    "sparsify",
    "save_split",
    "load_split",
]

NEGATIVE_RETRY_FACTOR = 100


class SplitError(ValueError):
    pass


class InfeasibleRatioError(SplitError):
    def __init__(self, requested: int, available: int, edge_count: int):
        self.requested = requested
        self.available = available
        self.max_ratio = available / edge_count if edge_count else 0.0
        super().__init__(
            f"cannot remove {requested} edges: only {available} edges lie outside the "
            f"spanning forest (maximum feasible ratio is {self.max_ratio:.6f})"
        )


class LabeledPair(NamedTuple):
    u: int
    v: int
    label: int


def _as_pairs(arr) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.int64).reshape(-1, 2)
    return np.sort(arr, axis=1)


@dataclass(frozen=True)
class SplitResult:
    """Residual graph plus the labeled pairs removed from / absent in it.

    ``positives`` and ``negatives`` are ``(n, 2)`` arrays with ``u < v`` per row.
    """

    subgraph: Graph
    positives: np.ndarray
    negatives: np.ndarray
    seed: int
    ratio: float

    def pairs(self) -> np.ndarray:
        """Positives followed by negatives, shape ``(2n, 2)``."""
        return np.concatenate([self.positives, self.negatives])

    def labels(self) -> np.ndarray:
        return np.concatenate(
            [np.ones(len(self.positives), np.int64), np.zeros(len(self.negatives), np.int64)]
        )

    def labeled_pairs(self) -> list[LabeledPair]:
        return [LabeledPair(int(u), int(v), int(y)) for (u, v), y in zip(self.pairs(), self.labels())]


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray = field(repr=False)

    def test_mask(self, fold: int) -> np.ndarray:
        return self.assignments == fold

    def __iter__(self):
        """Yield ``(train_idx, test_idx)`` for every fold."""
        for f in range(self.k):
            test = self.assignments == f
            yield np.flatnonzero(~test), np.flatnonzero(test)


def _positive_count(g: Graph, r: float) -> int:
    if not r > 0:
        raise SplitError(f"ratio must be positive, got {r}")
    return int(np.floor(g.edge_count * r + 1e-9))


def _removable_edges(g: Graph, protect_forest: bool) -> np.ndarray:
    edges = g.edges()
    if not protect_forest:
        return edges
    forest = spanning_forest(g)
    n = g.node_count
    in_forest = np.isin(edges[:, 0] * n + edges[:, 1], forest[:, 0] * n + forest[:, 1])
    return edges[~in_forest]


def max_feasible_ratio(g: Graph, protect_forest: bool = True) -> float:
    """Largest ratio ``r`` for which ``floor(|E| r)`` removable edges exist."""
    if g.edge_count == 0:
        return 0.0
    return len(_removable_edges(g, protect_forest)) / g.edge_count


def sample_negatives(g: Graph, count: int, seed, exclude=None) -> np.ndarray:
    """Uniformly sample ``count`` distinct non-adjacent pairs by rejection.

    ``seed`` may be an int or a ``numpy.random.Generator``. Pairs in
    ``exclude`` are treated like edges. Returns a ``(count, 2)`` array with
    ``u < v``.
    """
    n = g.node_count
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if count < 0:
        raise SplitError("count must be non-negative")
    free = n * (n - 1) // 2 - g.edge_count
    if count > free:
        raise SplitError(f"requested {count} non-edges but the graph has only {free}")
    out = np.empty((count, 2), dtype=np.int64)
    if count == 0:
        return out
    seen: set[int] = set()
    if exclude is not None:
        ex = _as_pairs(exclude)
        seen.update((ex[:, 0] * n + ex[:, 1]).tolist())
    filled = 0
    budget = NEGATIVE_RETRY_FACTOR * count
    drawn = 0
    while filled < count:
        if drawn >= budget:
            raise SplitError(
                f"negative sampling gave up after {drawn} draws ({filled}/{count} found); "
                "graph is too dense for rejection sampling"
            )
        batch = min(max(2 * (count - filled), 64), budget - drawn)
        cand = rng.integers(0, n, size=(batch, 2))
        drawn += batch
        lo = np.minimum(cand[:, 0], cand[:, 1])
        hi = np.maximum(cand[:, 0], cand[:, 1])
        ok = (lo != hi) & ~g.has_edges(np.column_stack([lo, hi]))
        for a, b in zip(lo[ok].tolist(), hi[ok].tolist()):
            key = a * n + b
            if key in seen:
                continue
            seen.add(key)
            out[filled] = (a, b)
            filled += 1
            if filled == count:
                break
    return out


def generate_split(g: Graph, r: float = 0.5, seed: int = 0, *, protect_forest: bool = True) -> SplitResult:
    """Remove ``floor(|E| r)`` non-forest edges as positives; sample as many negatives.

    With ``protect_forest=False`` any edge may be removed (e.g. ``r=1.0`` to use
    every observed link), and the residual graph may lose connectivity.
    """
    n_pos = _positive_count(g, r)
    removable = _removable_edges(g, protect_forest)
    if n_pos > len(removable):
        raise InfeasibleRatioError(n_pos, len(removable), g.edge_count)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(removable))
    positives = removable[order[:n_pos]].copy()
    negatives = sample_negatives(g, n_pos, rng)
    subgraph = g.remove_edges(positives)
    return SplitResult(subgraph=subgraph, positives=positives, negatives=negatives, seed=seed, ratio=r)


def k_fold(labels, k: int = 10, seed: int = 0) -> FoldPlan:
    """Stratified fold assignment.

    ``labels`` is a label array or a sequence of :class:`LabeledPair`. Each
    class is shuffled and dealt round-robin, so fold sizes differ by at most
    one within a class.
    """
    if len(labels) and isinstance(labels[0], tuple):
        labels = [p.label for p in labels]
    y = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise SplitError("k must be at least 2")
    if np.any((y != 0) & (y != 1)):
        raise SplitError("labels must be 0 or 1")
    rng = np.random.default_rng(seed)
    assign = np.empty(len(y), dtype=np.int64)
    offset = 0
    for cls in (1, 0):
        idx = np.flatnonzero(y == cls)
        if len(idx) < k:
            raise SplitError(f"class {cls} has {len(idx)} pairs, fewer than k={k}")
        idx = idx[rng.permutation(len(idx))]
        assign[idx] = (np.arange(len(idx)) + offset) % k
        # continue dealing where the previous class stopped to balance fold totals
        offset = (offset + len(idx)) % k
    return FoldPlan(k=k, assignments=assign)


def holdout(labels, test_ratio: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Stratified single train/test split; returns ``(train_idx, test_idx)``."""
    if not 0 < test_ratio < 1:
        raise SplitError("test_ratio must lie in (0, 1)")
    y = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    test = []
    for cls in (1, 0):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(len(idx))]
        n_test = int(round(len(idx) * test_ratio))
        test.append(idx[:n_test])
    test_idx = np.sort(np.concatenate(test))
    mask = np.zeros(len(y), bool)
    mask[test_idx] = True
    return np.flatnonzero(~mask), test_idx


def sparsify(g: Graph, fraction: float, seed: int = 0) -> Graph:
    """Drop ``floor(|E| fraction)`` random non-forest edges."""
    if fraction < 0:
        raise SplitError("fraction must be non-negative")
    if fraction == 0:
        return g
    n_drop = _positive_count(g, fraction)
    removable = _removable_edges(g, True)
    if n_drop > len(removable):
        raise InfeasibleRatioError(n_drop, len(removable), g.edge_count)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(removable))
    return g.remove_edges(removable[order[:n_drop]])


# -- serialization ---------------------------------------------------------
def _write_pairs(path: Path, pairs: np.ndarray, label: int, labels) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v", "label"])
        for u, v in pairs.tolist():
            w.writerow([labels[u], labels[v], label])


def _read_pairs(path: Path, g: Graph) -> np.ndarray:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append((g.node_id(rec["u"]), g.node_id(rec["v"])))
    return _as_pairs(rows)


def save_split(split: SplitResult, directory: str | os.PathLike) -> Path:
    """Write ``subgraph.edgelist``, ``positives.csv`` and ``negatives.csv``.

    Isolated nodes cannot be expressed in an edge list, so a
    ``nodes.txt`` file with every label in id order is written too.
    """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    labels = split.subgraph.labels
    write_edge_list(split.subgraph, d / "subgraph.edgelist")
    (d / "nodes.txt").write_text("".join(f"{lab}\n" for lab in labels), encoding="utf-8")
    _write_pairs(d / "positives.csv", split.positives, 1, labels)
    _write_pairs(d / "negatives.csv", split.negatives, 0, labels)
    return d


def load_split(directory: str | os.PathLike, *, seed: int = -1, ratio: float = float("nan")) -> SplitResult:
    d = Path(directory)
    sub = load_edge_list(d / "subgraph.edgelist")
    nodes_file = d / "nodes.txt"
    if nodes_file.exists():
        labels = nodes_file.read_text(encoding="utf-8").split()
        index = {lab: i for i, lab in enumerate(labels)}
        try:
            e = np.array([[index[sub.labels[u]], index[sub.labels[v]]] for u, v in sub.edges()], dtype=np.int64)
        except KeyError as exc:
            raise GraphError(f"subgraph label {exc} missing from nodes.txt") from None
        sub = Graph.from_edges(len(labels), e, labels)
    return SplitResult(
        subgraph=sub,
        positives=_read_pairs(d / "positives.csv", sub),
        negatives=_read_pairs(d / "negatives.csv", sub),
        seed=seed,
        ratio=ratio,
    )
