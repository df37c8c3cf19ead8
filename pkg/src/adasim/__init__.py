"""Link prediction with an adaptive, learned shift of cosine similarity over random-walk embeddings."""
from .baselines import HEURISTICS, OPERATORS, edge_features, heuristic_score, heuristic_scores, train_logreg, tune_hei_alpha
from .datasets import find_dataset, geometric_graph, krackhardt_kite, load_graph
from .embedding import EmbeddingMatrix, TrainConfig, load_embeddings, save_embeddings, train
from .evaluation import (
    EvaluationReport,
    ExperimentConfig,
    ScoredPair,
    auc,
    distance_histogram,
    edge_feature_correlation,
    penalty_sweep,
    run_experiment,
    run_method,
    sensitivity_sweep,
    sparsity_sweep,
)
from .graph import Graph, GraphError, load_edge_list, spanning_forest, topology_report, write_edge_list
from .model import AdaSimModel, PairFeatures, SGDConfig, pair_features, score, train_penalty
from .split import SplitResult, generate_split, k_fold, sample_negatives, sparsify
from .walks import Corpus, WalkConfig, biased_walks, derive_edge_sequences, generate_walks, random_walks

__version__ = "0.1.0"
