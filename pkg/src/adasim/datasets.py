"""Built-in toy graph and lookup of the benchmark edge lists on disk."""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .graph import Graph, GraphError, load_edge_list

__all__ = ["KITE_EDGES", "krackhardt_kite", "geometric_graph", "load_graph", "find_dataset", "data_dirs"]

KITE_EDGES = (
    (0, 1), (0, 2), (0, 3), (0, 5), (1, 3), (1, 4), (1, 6), (2, 3), (2, 5),
    (3, 4), (3, 5), (3, 6), (4, 6), (5, 6), (5, 7), (6, 7), (7, 8), (8, 9),
)


def krackhardt_kite() -> Graph:
    """The 10-node, 18-edge kite graph with labels ``"0"`` .. ``"9"``."""
    return Graph.from_edges(10, KITE_EDGES, labels=[str(i) for i in range(10)])


def geometric_graph(n: int = 300, radius: float = 0.1, seed: int = 0) -> Graph:
    """Random geometric graph on the unit square plus a ring through all nodes.

    Nodes closer than ``radius`` are joined; the ring keeps the graph connected.
    Links are local and clustered, so it is a convenient offline stand-in for
    the benchmark networks.
    """
    rng = np.random.default_rng(seed)
    xy = rng.random((n, 2))
    d = np.linalg.norm(xy[:, None] - xy[None], axis=2)
    iu, ju = np.triu_indices(n, 1)
    close = d[iu, ju] < radius
    edges = list(zip(iu[close].tolist(), ju[close].tolist()))
    edges += [(i, (i + 1) % n) for i in range(n)]
    return Graph.from_edges(n, edges)


def load_graph(path: str | os.PathLike) -> Graph:
    """Read an edge list, or a GML file (needs networkx) when the suffix is ``.gml``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"graph file not found: {path}")
    if path.suffix.lower() != ".gml":
        return load_edge_list(path)
    try:
        import networkx as nx
    except ImportError as exc:  # pragma: no cover
        raise GraphError("reading .gml files requires networkx") from exc
    nxg = nx.read_gml(path, label="id")
    lines = [f"{u} {v}" for u, v in nxg.edges() if u != v]
    return load_edge_list(lines)


def data_dirs() -> list[Path]:
    dirs = []
    if os.environ.get("ADASIM_DATA_DIR"):
        dirs.append(Path(os.environ["ADASIM_DATA_DIR"]))
    dirs.append(Path.cwd() / "data")
    dirs.append(Path(__file__).resolve().parents[2] / "data")
    return dirs


def find_dataset(name: str) -> Path | None:
    """First ``<name>.edgelist``, ``<name>.txt`` or ``<name>.gml`` in the data directories.

    Searched in order: ``$ADASIM_DATA_DIR``, ``./data`` and the ``data/``
    directory next to the source tree.
    """
    for d in data_dirs():
        for ext in (".edgelist", ".txt", ".gml"):
            p = d / f"{name}{ext}"
            if p.is_file():
                return p
    return None
