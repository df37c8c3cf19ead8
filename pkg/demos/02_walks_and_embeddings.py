"""Random walks and the embeddings trained on them.

Uniform walks feed the CBOW trainer used for the adaptive similarity;
second-order walks with return/in-out parameters feed the skip-gram
embeddings of the classifier baselines. Both trainers use hierarchical
softmax over a Huffman tree of node frequencies.

Run: python demos/02_walks_and_embeddings.py
"""
import itertools

import numpy as np

from adasim import TrainConfig, WalkConfig, biased_walks, krackhardt_kite, random_walks, train
from adasim.embedding import build_huffman
from adasim.walks import transition_probabilities

g = krackhardt_kite()
corpus = random_walks(g, WalkConfig(walks_per_node=10, walk_length=80, seed=1))
print(f"{len(corpus)} walks, {corpus.token_count} tokens")
print("first walk:", " ".join(g.labels[t] for t in corpus.sequences[0][:15]), "...")

# Node frequencies set the code lengths: frequent nodes get short codes.
tree = build_huffman(corpus.frequencies)
for node in np.argsort(-corpus.frequencies)[:3]:
    print(f"node {g.labels[node]}: frequency {corpus.frequencies[node]}, code {tree.code(node)}")

# Biased walks: small p favours returning, large q keeps the walk local.
nb, prob = transition_probabilities(g, 0, 3, return_p=0.25, inout_q=4.0)
print("step from 3 after arriving from 0:", {g.labels[x]: round(float(pr), 3) for x, pr in zip(nb, prob)})
local = biased_walks(g, WalkConfig(10, 80, 1, return_p=0.25, inout_q=4.0))
print("biased corpus tokens:", local.token_count)


def mean_cosines(emb):
    X = emb.vectors / np.linalg.norm(emb.vectors, axis=1, keepdims=True)
    C = X @ X.T
    adj, non = [], []
    for u, v in itertools.combinations(range(g.node_count), 2):
        (adj if g.has_edge(u, v) else non).append(C[u, v])
    return np.mean(adj), np.mean(non)


for mode, walks in (("cbow", corpus), ("skipgram", local)):
    emb = train(walks, TrainConfig(dim=16, seed=1, mode=mode), g.labels)
    a, n = mean_cosines(emb)
    print(f"{mode:8s}: mean cosine adjacent {a:.3f} vs non-adjacent {n:.3f}")
