import pytest

from adasim.datasets import KITE_EDGES, data_dirs, find_dataset, geometric_graph, krackhardt_kite, load_graph
from adasim.graph import connected_components


def test_kite_shape():
    g = krackhardt_kite()
    assert (g.node_count, g.edge_count) == (10, 18)
    assert g.labels == tuple(str(i) for i in range(10))
    assert sorted(g.degrees.tolist()) == [1, 2, 3, 3, 3, 4, 4, 5, 5, 6]


def test_kite_matches_networkx():
    nx = pytest.importorskip("networkx")
    ref = {tuple(sorted(e)) for e in nx.krackhardt_kite_graph().edges()}
    assert ref == set(KITE_EDGES)


def test_bundled_kite_file_agrees():
    g = load_graph(find_dataset("kite"))
    assert g.edge_count == 18 and g.node_count == 10


def test_load_gml(tmp_path):
    pytest.importorskip("networkx")
    path = tmp_path / "g.gml"
    path.write_text(
        "graph [\n directed 1\n node [ id 1 ]\n node [ id 2 ]\n node [ id 3 ]\n"
        " edge [ source 1 target 2 ]\n edge [ source 2 target 1 ]\n edge [ source 2 target 3 ]\n"
        " edge [ source 3 target 3 ]\n]\n"
    )
    g = load_graph(path)
    # directed arcs collapse to undirected edges and the self-loop is dropped
    assert (g.node_count, g.edge_count) == (3, 2)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope"):
        load_graph(tmp_path / "nope.txt")


def test_data_dir_lookup(tmp_path, monkeypatch):
    (tmp_path / "toy.txt").write_text("a b\nb c\n")
    monkeypatch.setenv("ADASIM_DATA_DIR", str(tmp_path))
    assert data_dirs()[0] == tmp_path
    assert find_dataset("toy") == tmp_path / "toy.txt"
    assert find_dataset("no-such-graph") is None


def test_geometric_graph_connected_and_seeded():
    g = geometric_graph(120, 0.12, 3)
    assert g.node_count == 120 and g.edge_count >= 120
    assert len(set(connected_components(g).tolist())) == 1
    assert g.edges().tolist() == geometric_graph(120, 0.12, 3).edges().tolist()
    assert g.edges().tolist() != geometric_graph(120, 0.12, 4).edges().tolist()
