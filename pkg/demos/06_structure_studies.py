"""Two structural observations that motivate the adaptive similarity.

1. Held-out links mostly join nodes that are two or three hops apart in the
   residual graph.
2. Edge vectors built from node vectors with the usual operators correlate
   weakly with edge vectors learned directly from walks over edges.

Run: python demos/06_structure_studies.py
"""
import numpy as np

from adasim import distance_histogram, edge_feature_correlation, generate_split, geometric_graph, krackhardt_kite
from adasim.embedding import TrainConfig
from adasim.walks import WalkConfig

g = geometric_graph(300, 0.1, seed=0)
split = generate_split(g, 0.5, seed=42)
for row in distance_histogram(split.subgraph, split.positives):
    print(f"distance {row['s']}: {row['probability']:.3f} ({row['count']} pairs)")

rows = edge_feature_correlation(krackhardt_kite(), WalkConfig(10, 80, 0), TrainConfig(seed=0))
r = np.array([row["pearson"] for row in rows])
print(f"{len(rows)} (edge, operator) correlations; share with |r| < 0.5: {np.mean(np.abs(r) < 0.5):.2f}")
for op in sorted({row["operator"] for row in rows}):
    vals = [row["pearson"] for row in rows if row["operator"] == op]
    print(f"  {op:11s} mean |r| {np.mean(np.abs(vals)):.3f}")
