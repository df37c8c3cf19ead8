import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from adasim.datasets import krackhardt_kite
from adasim.graph import Graph, load_edge_list
from adasim.walks import (
    Corpus,
    CorpusError,
    WalkConfig,
    biased_walks,
    derive_edge_sequences,
    generate_walks,
    load_corpus,
    random_walks,
    save_corpus,
    transition_probabilities,
)
from oracles import random_edges


def assert_adjacent_steps(g, corpus):
    for seq in corpus.sequences:
        for a, b in zip(seq[:-1], seq[1:]):
            assert g.has_edge(int(a), int(b))


def test_single_edge_alternates():
    g = Graph.from_edges(2, [(0, 1)])
    c = random_walks(g, WalkConfig(walks_per_node=3, walk_length=3, seed=1))
    for seq in c.sequences:
        assert seq.tolist() in ([0, 1, 0], [1, 0, 1])


def test_toy_walk_shape():
    g = load_edge_list(["A B", "A C", "A D", "D F", "F E", "E C", "D E"])
    c = random_walks(g, WalkConfig(walks_per_node=5, walk_length=5, seed=0))
    assert len(c) == 5 * g.node_count
    assert all(len(s) == 5 for s in c.sequences)
    assert_adjacent_steps(g, c)


def test_corpus_shape_and_frequencies():
    g = krackhardt_kite()
    cfg = WalkConfig(walks_per_node=7, walk_length=13, seed=3)
    c = random_walks(g, cfg)
    assert len(c) == 70
    assert c.frequencies.sum() == c.token_count == 70 * 13
    assert c.lengths.max() <= 13


def test_each_pass_visits_every_root_once():
    g = krackhardt_kite()
    c = random_walks(g, WalkConfig(walks_per_node=4, walk_length=5, seed=9))
    roots = c.walks[:, 0].reshape(4, 10)
    for row in roots:
        assert sorted(row.tolist()) == list(range(10))
    assert not all(np.array_equal(roots[0], r) for r in roots[1:])


def test_isolated_node_truncates_walk():
    g = Graph.from_edges(3, [(0, 1)])
    c = random_walks(g, WalkConfig(walks_per_node=2, walk_length=6, seed=0))
    for seq in c.sequences:
        if seq[0] == 2:
            assert seq.tolist() == [2]
        else:
            assert len(seq) == 6


def test_uniform_next_step_distribution():
    # star centre with three leaves; every second step leaves the centre
    g = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    c = random_walks(g, WalkConfig(walks_per_node=250, walk_length=81, seed=5))
    W = c.walks
    nxt = W[:, 1:][W[:, :-1] == 0]
    assert len(nxt) >= 30000
    counts = np.bincount(nxt, minlength=4)[1:]
    assert np.all(np.abs(counts / counts.sum() - 1 / 3) < 0.01)
    assert chisquare(counts).pvalue > 1e-3


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 25), st.floats(0.1, 0.6), st.integers(0, 2**31), st.integers(1, 4), st.integers(1, 30))
def test_walks_follow_edges_and_are_deterministic(n, p, seed, k, l):
    rng = np.random.default_rng(seed)
    g = Graph.from_edges(n, random_edges(rng, n, p))
    cfg = WalkConfig(k, l, seed)
    a, b = generate_walks(g, cfg), generate_walks(g, cfg)
    assert np.array_equal(a.walks, b.walks) and np.array_equal(a.lengths, b.lengths)
    assert_adjacent_steps(g, a)
    assert a.frequencies.sum() == a.lengths.sum()


def test_seed_changes_corpus():
    g = krackhardt_kite()
    a = random_walks(g, WalkConfig(2, 20, 0))
    b = random_walks(g, WalkConfig(2, 20, 1))
    assert not np.array_equal(a.walks, b.walks)


# -- second-order walks --------------------------------------------------------------
def test_path_return_probability():
    g = Graph.from_edges(3, [(0, 1), (1, 2)])
    nb, prob = transition_probabilities(g, 0, 1, return_p=0.25, inout_q=1.0)
    assert dict(zip(nb.tolist(), prob.tolist()))[0] == pytest.approx(0.8, abs=1e-15)


def test_triangle_probabilities_normalised():
    g = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    for p, q in [(0.25, 4.0), (2.0, 0.5), (1.0, 1.0)]:
        _, prob = transition_probabilities(g, 0, 1, p, q)
        assert prob.sum() == pytest.approx(1.0, abs=1e-15)


def test_unit_bias_equals_uniform_walks():
    # with all weights 1 the biased sampler consumes the same stream the same way
    rng = np.random.default_rng(0)
    g = Graph.from_edges(30, random_edges(rng, 30, 0.2))
    a = random_walks(g, WalkConfig(3, 40, 7))
    b = biased_walks(g, WalkConfig(3, 40, 7, return_p=1.0, inout_q=1.0))
    assert np.array_equal(a.walks, b.walks)


def test_biased_empirical_matches_transition_oracle():
    # kite: from node 3 having arrived from node 0
    g = krackhardt_kite()
    p, q = 0.5, 2.0
    c = biased_walks(g, WalkConfig(walks_per_node=400, walk_length=80, seed=2, return_p=p, inout_q=q))
    W = c.walks
    prev, cur, nxt = W[:, :-2], W[:, 1:-1], W[:, 2:]
    sel = (prev == 0) & (cur == 3) & (nxt >= 0)
    nb, prob = transition_probabilities(g, 0, 3, p, q)
    counts = np.array([(nxt[sel] == x).sum() for x in nb])
    assert counts.sum() > 5000
    assert chisquare(counts, prob * counts.sum()).pvalue > 1e-3


def test_bias_validation():
    g = krackhardt_kite()
    with pytest.raises(ValueError):
        random_walks(g, WalkConfig(1, 5, 0, 0.5, 2.0))
    with pytest.raises(ValueError):
        biased_walks(g, WalkConfig(1, 5, 0))
    with pytest.raises(ValueError):
        WalkConfig(1, 5, 0, return_p=0.5)
    with pytest.raises(ValueError):
        WalkConfig(0, 5)


def test_biased_walks_follow_edges():
    g = krackhardt_kite()
    c = biased_walks(g, WalkConfig(3, 30, 1, 0.25, 4.0))
    assert_adjacent_steps(g, c)


# -- edge sequences ---------------------------------------------------------------------
def test_edge_sequence_example():
    g = load_edge_list(["A D", "D F", "A B"])
    A, D, F = (g.node_id(x) for x in "ADF")
    edges = [tuple(e) for e in g.edges().tolist()]
    c = Corpus.from_sequences([[A, D, F], [D]], g.node_count)
    e = derive_edge_sequences(c, g)
    seqs = e.sequences
    assert [edges[t] for t in seqs[0]] == [tuple(sorted((A, D))), tuple(sorted((D, F)))]
    assert len(seqs[1]) == 0


def test_kite_edge_vocabulary():
    g = krackhardt_kite()
    e = derive_edge_sequences(random_walks(g, WalkConfig(10, 80, 0)), g)
    assert e.vocab_size == 18
    used = set(e.walks[e.walks >= 0].tolist())
    assert used <= set(range(18))
    assert e.token_count == 100 * 79


def test_non_adjacent_step_is_corruption():
    g = krackhardt_kite()
    bad = Corpus.from_sequences([[0, 1, 9]], 10)
    with pytest.raises(CorpusError, match="non-adjacent"):
        derive_edge_sequences(bad, g)


def test_corpus_file_round_trip(tmp_path):
    g = load_edge_list(["a b", "b c", "c a", "c d"])
    c = random_walks(g, WalkConfig(2, 6, 4))
    save_corpus(c, tmp_path / "walks.txt", g.labels)
    first = (tmp_path / "walks.txt").read_text().splitlines()[0].split()
    assert all(tok in g.labels for tok in first)
    back = load_corpus(tmp_path / "walks.txt", g)
    assert np.array_equal(back.walks, c.walks)
