"""Load a graph, summarise it, and hold out edges for link prediction.

The split removes a share of the edges as positive examples, but never an
edge of the spanning forest, so the residual graph keeps every component
connected. The same number of non-edges is sampled as negatives.

Run: python demos/01_graph_and_split.py
"""
import tempfile
from pathlib import Path

from adasim import generate_split, geometric_graph, k_fold, krackhardt_kite, topology_report
from adasim.split import InfeasibleRatioError, load_split, max_feasible_ratio, save_split

kite = krackhardt_kite()
print("kite:", topology_report(kite, compute_diameter=True).as_dict())

g = geometric_graph(300, 0.1, seed=0)
print("geometric stand-in:", topology_report(g).as_dict())

# Half of the edges become positives; the forest keeps the rest connected.
split = generate_split(g, 0.5, seed=42)
print(f"{len(split.positives)} positives, {len(split.negatives)} negatives, "
      f"{split.subgraph.edge_count} edges left")

# Sparse graphs may not have enough edges outside the forest.
print(f"largest feasible ratio on the kite graph: {max_feasible_ratio(kite):.3f}")
try:
    generate_split(kite, 0.5, seed=0)
except InfeasibleRatioError as exc:
    print("kite at r=0.5:", exc)

# Stratified folds: every fold holds the same mix of positives and negatives.
folds = k_fold(split.labels(), 10, seed=42)
for i, (train_idx, test_idx) in enumerate(folds):
    if i < 2:
        print(f"fold {i}: train {len(train_idx)}, test {len(test_idx)}, "
              f"positives in test {split.labels()[test_idx].sum()}")

# Splits round-trip through plain files (edge list plus two CSVs).
with tempfile.TemporaryDirectory() as tmp:
    save_split(split, tmp)
    print("files:", sorted(p.name for p in Path(tmp).iterdir()))
    back = load_split(tmp)
    assert (back.pairs() == split.pairs()).all()
