"""The comparison predictors: neighbourhood heuristics and edge classifiers.

Heuristics score a pair from the residual graph alone. The walk-based
baselines turn two node vectors into an edge vector with a binary operator
and train a logistic regression on it.

Run: python demos/04_baselines.py
"""
import numpy as np

from adasim import HEURISTICS, OPERATORS, auc, edge_features, generate_split, geometric_graph, heuristic_scores
from adasim import k_fold, train_logreg, tune_hei_alpha
from adasim.embedding import TrainConfig, train
from adasim.walks import WalkConfig, generate_walks

g = geometric_graph(300, 0.1, seed=0)
split = generate_split(g, 0.5, seed=42)
g_s, pairs, y = split.subgraph, split.pairs(), split.labels()

for kind in HEURISTICS:
    if kind == "hei":
        # the degree-gap exponent is chosen on labelled pairs from a grid over [-2, 2]
        alpha = tune_hei_alpha(g_s, pairs, y)
        s = heuristic_scores(g_s, kind, pairs, alpha)
        print(f"{kind:5s} AUC {auc(s, y):.4f}  (alpha = {alpha})")
    else:
        print(f"{kind:5s} AUC {auc(heuristic_scores(g_s, kind, pairs), y):.4f}")

emb = train(generate_walks(g_s, WalkConfig(10, 80, 42)), TrainConfig(dim=64, seed=42, mode="skipgram"))
x = emb.vectors
print("operators on one pair:", {op: np.round(edge_features(x, 0, 1, op)[:3], 3).tolist() for op in OPERATORS})

for op in OPERATORS:
    X = edge_features(emb, pairs, operator=op)
    aucs = []
    for tr, te in k_fold(y, 10, seed=42):
        clf = train_logreg(X[tr], y[tr])
        aucs.append(auc(clf.decision_function(X[te]), y[te]))
    print(f"logistic regression on {op:11s}: AUC {np.mean(aucs):.4f}")
