"""The repeated, cross-validated comparison behind the results table.

Each repeat draws a fresh split (seed = master seed + repeat), trains the
embeddings on its residual graph and runs 10-fold CV for every method on the
same pairs and folds. Sparsity and sensitivity studies re-run this loop under
changed inputs.

Run: python demos/05_experiment.py  (about a minute)
"""
from adasim import ExperimentConfig, geometric_graph, run_experiment, sensitivity_sweep, sparsity_sweep

g = geometric_graph(300, 0.1, seed=0)
cfg = ExperimentConfig(repeats=2, dim=64)
reports = run_experiment(g, ["adasim", "cosine", "cn", "ra", "pa", "si", "cclp", "hei"], cfg)
print(f"{'method':8s} {'mean AUC':>9s} {'std':>7s}")
for name, r in reports.items():
    print(f"{name:8s} {r.mean:9.4f} {r.std:7.4f}")
print("penalties of the first repeat:", [round(p, 3) for p in reports["adasim"].metadata["repeats"][0]["penalty"]])

small = ExperimentConfig(repeats=1, dim=32, walks_per_node=5, walk_length=40)
for row in sparsity_sweep(g, [0.0, 0.2, 0.4], ["adasim", "ra"], small):
    print(f"removed {row['fraction']:.0%} before splitting: {row['method']:6s} AUC {row['auc']:.4f} ({row['status']})")
for row in sensitivity_sweep(g, {"d": [8, 32, 64]}, "adasim", small):
    print(f"d = {row['d']:3d}: AUC {row['auc']:.4f}")
