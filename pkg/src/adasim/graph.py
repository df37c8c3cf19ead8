"""Undirected simple graphs with dense integer node ids.

The :class:`Graph` stores a CSR adjacency (``indptr``/``indices``) whose rows
are strictly ascending, plus the table mapping node ids back to the labels
found in the input file. Everything downstream (walks, splits, heuristics)
works on node ids.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Graph",
    "GraphError",
    "EdgeListParseError",
    "TopologyReport",
    "UNREACHABLE",
    "load_edge_list",
    "write_edge_list",
    "common_neighbor_count",
    "local_clustering",
    "clustering_coefficients",
    "triangle_counts",
    "bfs_distances",
    "spanning_forest",
    "connected_components",
    "topology_report",
    "UnionFind",
]

UNREACHABLE = -1


class GraphError(ValueError):
    """Raised for invalid graphs or invalid node ids."""


class EdgeListParseError(GraphError):
    def __init__(self, lineno: int, line: str, reason: str):
        self.lineno = lineno
        self.line = line
        super().__init__(f"line {lineno}: {reason}: {line!r}")


class Graph:
    """Immutable undirected simple graph.

    Parameters
    ----------
    indptr, indices : ndarray
        CSR adjacency. Row ``u`` is ``indices[indptr[u]:indptr[u + 1]]`` and
        must be strictly ascending, symmetric and free of ``u`` itself.
    labels : sequence of str, optional
        Original label of every node id. Defaults to ``str(id)``.

    Use :meth:`from_edges` to build a graph from an arbitrary edge array; the
    constructor validates but does not repair.
    """

    __slots__ = ("indptr", "indices", "labels", "_label_index", "_edges", "_keys", "_csr")

    def __init__(self, indptr, indices, labels: Sequence[str] | None = None, *, validate: bool = True):
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        n = len(indptr) - 1
        if n < 0:
            raise GraphError("indptr must have at least one entry")
        if labels is None:
            labels = [str(i) for i in range(n)]
        labels = tuple(str(x) for x in labels)
        if len(labels) != n:
            raise GraphError(f"{len(labels)} labels for {n} nodes")
        indptr.setflags(write=False)
        indices.setflags(write=False)
        self.indptr = indptr
        self.indices = indices
        self.labels = labels
        self._label_index = None
        self._edges = None
        self._keys = None
        self._csr = None
        if validate:
            self._validate()

    @classmethod
    def from_edges(cls, n: int, edges, labels: Sequence[str] | None = None) -> "Graph":
        """Build a graph on ``n`` nodes; self-loops and duplicates are dropped."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise GraphError("edge endpoint out of range")
        u = np.minimum(edges[:, 0], edges[:, 1])
        v = np.maximum(edges[:, 0], edges[:, 1])
        keep = u != v
        keys = np.unique(u[keep] * n + v[keep]) if n else np.empty(0, np.int64)
        u, v = keys // max(n, 1), keys % max(n, 1)
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(indptr, dst, labels, validate=False)

    def _validate(self) -> None:
        n = self.node_count
        ip, ix = self.indptr, self.indices
        if ip[0] != 0 or ip[-1] != len(ix) or np.any(np.diff(ip) < 0):
            raise GraphError("malformed indptr")
        if ix.size == 0:
            return
        if ix.min() < 0 or ix.max() >= n:
            raise GraphError("neighbor id out of range")
        rows = np.repeat(np.arange(n), np.diff(ip))
        if np.any(rows == ix):
            raise GraphError("self-loop present")
        same_row = rows[1:] == rows[:-1]
        if np.any(ix[1:][same_row] <= ix[:-1][same_row]):
            raise GraphError("adjacency rows must be strictly ascending")
        fwd = np.sort(rows * n + ix)
        rev = np.sort(ix * n + rows)
        if not np.array_equal(fwd, rev):
            raise GraphError("adjacency is not symmetric")

    # -- basic queries -------------------------------------------------
    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    def __len__(self) -> int:
        return self.node_count

    def __repr__(self) -> str:
        return f"Graph(nodes={self.node_count}, edges={self.edge_count})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.labels == other.labels
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    __hash__ = None

    def check_node(self, u: int) -> int:
        u = int(u)
        if not 0 <= u < self.node_count:
            raise GraphError(f"invalid node id {u} (graph has {self.node_count} nodes)")
        return u

    def neighbors(self, u: int) -> np.ndarray:
        u = self.check_node(u)
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def degree(self, u: int | None = None):
        deg = np.diff(self.indptr)
        if u is None:
            return deg
        return int(deg[self.check_node(u)])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        i = np.searchsorted(row, v)
        return bool(i < len(row) and row[i] == v)

    def edge_keys(self) -> np.ndarray:
        """Sorted ``u * n + v`` keys of every edge with ``u < v``."""
        if self._keys is None:
            e = self.edges()
            keys = e[:, 0] * self.node_count + e[:, 1]
            keys.setflags(write=False)
            self._keys = keys
        return self._keys

    def has_edges(self, pairs) -> np.ndarray:
        """Vectorized edge membership for an ``(m, 2)`` array of pairs."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        q = lo * self.node_count + hi
        keys = self.edge_keys()
        pos = np.searchsorted(keys, q)
        pos[pos == len(keys)] = 0
        return (keys[pos] == q) if len(keys) else np.zeros(len(q), bool)

    def edges(self) -> np.ndarray:
        """``(m, 2)`` array of edges ``(u, v)`` with ``u < v``, in ascending order."""
        if self._edges is None:
            rows = np.repeat(np.arange(self.node_count, dtype=np.int64), self.degrees)
            mask = rows < self.indices
            e = np.column_stack([rows[mask], self.indices[mask]])
            e.setflags(write=False)
            self._edges = e
        return self._edges

    def adjacency_matrix(self) -> sp.csr_matrix:
        if self._csr is None:
            data = np.ones(len(self.indices), dtype=np.float64)
            self._csr = sp.csr_matrix((data, self.indices, self.indptr), shape=(self.node_count,) * 2)
        return self._csr

    def label_index(self) -> dict[str, int]:
        if self._label_index is None:
            self._label_index = {lab: i for i, lab in enumerate(self.labels)}
        return self._label_index

    def node_id(self, label: str) -> int:
        try:
            return self.label_index()[str(label)]
        except KeyError:
            raise GraphError(f"unknown node label {label!r}") from None

    def remove_edges(self, pairs) -> "Graph":
        """Return a copy without the given edges (node set and labels unchanged)."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        drop = np.zeros(self.edge_count, dtype=bool)
        if len(pairs):
            lo = np.minimum(pairs[:, 0], pairs[:, 1])
            hi = np.maximum(pairs[:, 0], pairs[:, 1])
            drop = np.isin(self.edge_keys(), lo * self.node_count + hi)
        return Graph.from_edges(self.node_count, self.edges()[~drop], self.labels)


# -- edge-list I/O ---------------------------------------------------------
def _open_text(source) -> tuple[Iterable[str], bool]:
    if isinstance(source, (str, os.PathLike)) and not (isinstance(source, str) and "\n" in source):
        return open(source, encoding="utf-8"), True
    if isinstance(source, str):
        return io.StringIO(source), False
    if isinstance(source, (list, tuple)):
        return iter(source), False
    return source, False


def load_edge_list(source) -> Graph:
    """Parse a whitespace-separated edge list.

    ``source`` may be a path, an open text stream, a string holding the whole
    file, or a list of lines. ``#`` comments and blank lines are skipped. Labels
    get dense ids in first-seen order; self-loops are dropped and repeated or
    reversed edges merged.
    """
    fh, close = _open_text(source)
    index: dict[str, int] = {}
    labels: list[str] = []
    src: list[int] = []
    dst: list[int] = []
    try:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            if len(toks) != 2:
                raise EdgeListParseError(lineno, line, f"expected 2 tokens, got {len(toks)}")
            ids = []
            for tok in toks:
                i = index.get(tok)
                if i is None:
                    i = index[tok] = len(labels)
                    labels.append(tok)
                ids.append(i)
            src.append(ids[0])
            dst.append(ids[1])
    finally:
        if close:
            fh.close()
    if not labels:
        raise GraphError("edge list contains no edges")
    g = Graph.from_edges(len(labels), np.column_stack([src, dst]), labels)
    if g.edge_count == 0:
        raise GraphError("edge list contains only self-loops")
    return g


def write_edge_list(g: Graph, dest: str | os.PathLike | TextIO | None = None) -> str | None:
    """Write ``min_label max_label`` per edge, sorted lexicographically.

    Returns the text when ``dest`` is None.
    """
    lab = g.labels
    rows = []
    for u, v in g.edges():
        a, b = lab[u], lab[v]
        rows.append((a, b) if a <= b else (b, a))
    rows.sort()
    text = "".join(f"{a} {b}\n" for a, b in rows)
    if dest is None:
        return text
    if isinstance(dest, (str, os.PathLike)):
        Path(dest).write_text(text, encoding="utf-8")
    else:
        dest.write(text)
    return None


# -- local structure -------------------------------------------------------
def common_neighbor_count(g: Graph, u: int, v: int) -> int:
    """``|N(u) & N(v)|`` by merging the two sorted rows."""
    a = g.neighbors(u)
    b = g.neighbors(v)
    if u == v:
        raise GraphError("common neighbors need two distinct nodes")
    i = j = count = 0
    na, nb = len(a), len(b)
    while i < na and j < nb:
        x, y = a[i], b[j]
        if x == y:
            count += 1
            i += 1
            j += 1
        elif x < y:
            i += 1
        else:
            j += 1
    return count


def triangle_counts(g: Graph) -> np.ndarray:
    """Number of triangles through each node."""
    A = g.adjacency_matrix()
    return np.rint(np.asarray((A @ A).multiply(A).sum(axis=1)).ravel() / 2).astype(np.int64)


def clustering_coefficients(g: Graph) -> np.ndarray:
    """Local clustering of every node; 0 where degree < 2."""
    k = g.degrees.astype(np.float64)
    t = triangle_counts(g).astype(np.float64)
    out = np.zeros(g.node_count)
    ok = k >= 2
    out[ok] = t[ok] / (k[ok] * (k[ok] - 1) / 2)
    return out


def local_clustering(g: Graph, z: int) -> float:
    z = g.check_node(z)
    nb = g.neighbors(z)
    k = len(nb)
    if k < 2:
        return 0.0
    nbset = set(nb.tolist())
    links = sum(1 for x in nb for y in g.neighbors(x) if y > x and y in nbset)
    return links / (k * (k - 1) / 2)


# -- distances and components ---------------------------------------------
def bfs_distances(g: Graph, source: int) -> np.ndarray:
    """Unweighted shortest-path lengths from ``source``; ``UNREACHABLE`` (-1) otherwise."""
    source = g.check_node(source)
    dist = np.full(g.node_count, UNREACHABLE, dtype=np.int64)
    dist[source] = 0
    ip, ix = g.indptr, g.indices
    frontier = np.array([source], dtype=np.int64)
    level = 0
    while frontier.size:
        level += 1
        starts, stops = ip[frontier], ip[frontier + 1]
        lens = stops - starts
        if lens.sum() == 0:
            break
        offs = np.repeat(starts - np.cumsum(lens) + lens, lens) + np.arange(lens.sum())
        nxt = np.unique(ix[offs])
        nxt = nxt[dist[nxt] == UNREACHABLE]
        dist[nxt] = level
        frontier = nxt
    return dist


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def spanning_forest(g: Graph) -> np.ndarray:
    """Kruskal on unit weights: union-find over edges in ascending ``(u, v)`` order.

    Returns a ``(node_count - component_count, 2)`` edge array.
    """
    uf = UnionFind(g.node_count)
    keep = [i for i, (u, v) in enumerate(g.edges().tolist()) if uf.union(u, v)]
    return g.edges()[np.asarray(keep, dtype=np.int64)].reshape(-1, 2)


def connected_components(g: Graph) -> np.ndarray:
    """Component label per node (labels are the smallest node id in each component)."""
    uf = UnionFind(g.node_count)
    for u, v in g.edges().tolist():
        uf.union(u, v)
    roots = np.array([uf.find(i) for i in range(g.node_count)], dtype=np.int64)
    first = {}
    for i, r in enumerate(roots.tolist()):
        first.setdefault(r, i)
    return np.array([first[r] for r in roots.tolist()], dtype=np.int64)


# -- summary ---------------------------------------------------------------
@dataclass(frozen=True)
class TopologyReport:
    node_count: int
    edge_count: int
    avg_degree: float
    avg_clustering: float
    density: float
    diameter: int | None = None

    def as_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "avg_degree": self.avg_degree,
            "avg_clustering": self.avg_clustering,
            "density": self.density,
            "diameter": self.diameter,
        }


def topology_report(g: Graph, compute_diameter: bool = False) -> TopologyReport:
    """Basic statistics of ``g``.

    The diameter (longest finite geodesic) needs one BFS per node, which is
    quadratic work; only request it for graphs up to a few tens of thousands of
    nodes.
    """
    n, m = g.node_count, g.edge_count
    diameter = None
    if compute_diameter:
        diameter = 0
        for s in range(n):
            diameter = max(diameter, int(bfs_distances(g, s).max()))
    return TopologyReport(
        node_count=n,
        edge_count=m,
        avg_degree=2.0 * m / n,
        avg_clustering=float(clustering_coefficients(g).mean()),
        density=2.0 * m / (n * (n - 1)) if n > 1 else 0.0,
        diameter=diameter,
    )

