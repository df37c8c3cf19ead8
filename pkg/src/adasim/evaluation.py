"""AUC, the cross-validated experiment driver, and parameter/structure studies."""
from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import baselines
from .baselines import HEURISTICS, OPERATORS, CorrelationError, LogRegConfig, pearson
from .embedding import EmbeddingMatrix, TrainConfig, train
from .graph import UNREACHABLE, Graph, bfs_distances
from .model import SGDConfig, pair_features, score, train_penalty
from .split import FoldPlan, InfeasibleRatioError, SplitError, SplitResult, generate_split, k_fold, max_feasible_ratio, sparsify
from .walks import WalkConfig, derive_edge_sequences, generate_walks

__all__ = [
    "ScoredPair",
    "EvaluationReport",
    "ExperimentConfig",
    "EmbeddingCache",
    "METHODS",
    "auc",
    "run_method",
    "run_experiment",
    "penalty_sweep",
    "sparsity_sweep",
    "sensitivity_sweep",
    "distance_histogram",
    "edge_feature_correlation",
    "write_csv",
    "write_summary",
]

METHODS = ("adasim", "cosine") + HEURISTICS + ("deepwalk", "node2vec")
DEFAULT_METHODS = ("adasim", "cosine") + HEURISTICS + ("deepwalk",)


class ScoredPair(NamedTuple):
    u: int
    v: int
    label: int
    score: float


def auc(scores, labels=None) -> float:
    """Mann-Whitney AUC with average ranks (ties count one half).

    Pass ``scores`` and ``labels`` arrays, or a single sequence of
    :class:`ScoredPair`.
    """
    if labels is None:
        scored = list(scores)
        scores = [p.score for p in scored]
        labels = [p.label for p in scored]
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    _, inv, counts = np.unique(s, return_inverse=True, return_counts=True)
    # rank of a tie group = mean of the 1-based positions it occupies
    ends = np.cumsum(counts)
    ranks = (ends - (counts - 1) / 2.0)[inv]
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass
class EvaluationReport:
    method: str
    fold_aucs: list
    pooled_auc: float = float("nan")
    metadata: dict = field(default_factory=dict)
    scores: np.ndarray | None = field(default=None, repr=False)
    seconds: float = 0.0

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_aucs))

    @property
    def std(self) -> float:
        return float(np.std(self.fold_aucs))

    def row(self) -> dict:
        return {
            "method": self.method,
            "mean_auc": self.mean,
            "std_auc": self.std,
            "pooled_auc": self.pooled_auc,
            "folds": len(self.fold_aucs),
            "seconds": self.seconds,
        }

    def as_dict(self) -> dict:
        d = self.row()
        d["fold_aucs"] = [float(x) for x in self.fold_aucs]
        d["metadata"] = _jsonable(self.metadata)
        return d


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return x


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a cross-validated run needs besides the graph.

    Defaults: 128 dimensions, 10 walks of length 80 per node, window 10, one
    training epoch, half of the edges held out, 10 folds, 10 repeats. With
    ``cap_ratio`` a ratio above the largest feasible one is lowered to it
    instead of raising :class:`InfeasibleRatioError`.
    """

    ratio: float = 0.5
    folds: int = 10
    repeats: int = 10
    seed: int = 42
    dim: int = 128
    walks_per_node: int = 10
    walk_length: int = 80
    window: int = 10
    epochs: int = 1
    alpha0: float = 0.025
    sgd: SGDConfig = field(default_factory=SGDConfig)
    logreg: LogRegConfig = field(default_factory=LogRegConfig)
    node2vec_grid: tuple = (0.25, 0.5, 1.0, 2.0)
    protect_forest: bool = True
    cap_ratio: bool = False
    workers: int = 1

    def effective_ratio(self, g: Graph) -> float:
        if not self.cap_ratio:
            return self.ratio
        return min(self.ratio, max_feasible_ratio(g, self.protect_forest))

    def walk_config(self, seed: int, return_p=None, inout_q=None) -> WalkConfig:
        return WalkConfig(self.walks_per_node, self.walk_length, seed, return_p, inout_q)

    def train_config(self, seed: int, mode: str) -> TrainConfig:
        return TrainConfig(dim=self.dim, window=self.window, epochs=self.epochs, alpha0=self.alpha0,
                           seed=seed, mode=mode, workers=self.workers)

    def as_dict(self) -> dict:
        return _jsonable(asdict(self))


class EmbeddingCache:
    """Trains embeddings of one residual graph on demand.

    Keys are ``("cbow", None, None)`` for the AdaSim embedding and
    ``("skipgram", p, q)`` for walk-based classifiers (``p = q = None`` means
    uniform walks).
    """

    def __init__(self, g: Graph, cfg: ExperimentConfig, seed: int):
        self.g = g
        self.cfg = cfg
        self.seed = seed
        self._store: dict = {}
        self.seconds: dict = {}

    def get(self, mode: str = "cbow", return_p=None, inout_q=None) -> EmbeddingMatrix:
        key = (mode, return_p, inout_q)
        if key not in self._store:
            t0 = time.perf_counter()
            corpus = generate_walks(self.g, self.cfg.walk_config(self.seed, return_p, inout_q))
            self._store[key] = train(corpus, self.cfg.train_config(self.seed, mode), self.g.labels)
            self.seconds[key] = time.perf_counter() - t0
        return self._store[key]

    def put(self, emb: EmbeddingMatrix, mode: str = "cbow", return_p=None, inout_q=None) -> None:
        self._store[(mode, return_p, inout_q)] = emb


def _split_method(method: str) -> tuple[str, str | None]:
    name, _, op = method.lower().partition(":")
    if name not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if op and (name not in ("deepwalk", "node2vec") or op not in OPERATORS):
        raise ValueError(f"bad operator in {method!r}; operators are {OPERATORS}")
    return name, op or None


def _cv(scorer, n: int, labels: np.ndarray, folds: FoldPlan):
    """Run ``scorer(train_idx, test_idx)`` per fold; return fold AUCs, out-of-fold scores, extras."""
    fold_aucs, extras = [], []
    oof = np.empty(n)
    for tr, te in folds:
        s, extra = scorer(tr, te)
        oof[te] = s
        fold_aucs.append(auc(s, labels[te]))
        extras.append(extra)
    return fold_aucs, oof, extras


def _classifier_cv(emb, pairs, y, folds, op, lr_cfg):
    X = baselines.edge_features(emb, pairs, operator=op)

    def scorer(tr, te):
        m = baselines.train_logreg(X[tr], y[tr], lr_cfg)
        return m.decision_function(X[te]), None

    return _cv(scorer, len(y), y, folds)


def run_method(split: SplitResult, folds: FoldPlan, method: str, cache: EmbeddingCache | None = None,
               cfg: ExperimentConfig | None = None) -> EvaluationReport:
    """Cross-validated AUC of one method on one split.

    Training-free scorers (heuristics except HEI, cosine) score every pair once
    and the folds only partition the evaluation. AdaSim fits its penalty, HEI
    its exponent and the walk classifiers a logistic regression on the k - 1
    training folds of each round.
    """
    cfg = cfg or ExperimentConfig()
    name, op = _split_method(method)
    g_s = split.subgraph
    pairs, y = split.pairs(), split.labels()
    if cache is None:
        cache = EmbeddingCache(g_s, cfg, split.seed)
    t0 = time.perf_counter()
    meta: dict = {}

    if name in HEURISTICS and name != "hei":
        s = baselines.heuristic_scores(g_s, name, pairs)
        fold_aucs, oof, _ = _cv(lambda tr, te: (s[te], None), len(y), y, folds)
    elif name == "hei":
        def scorer(tr, te):
            alpha = baselines.tune_hei_alpha(g_s, pairs[tr], y[tr])
            return baselines.heuristic_scores(g_s, "hei", pairs[te], alpha), alpha

        fold_aucs, oof, alphas = _cv(scorer, len(y), y, folds)
        meta["alpha"] = alphas
    elif name in ("adasim", "cosine"):
        emb = cache.get("cbow")
        pf = pair_features(emb, pairs, allow_zero=True)
        if name == "cosine":
            s = pf.cosine
            fold_aucs, oof, _ = _cv(lambda tr, te: (s[te], None), len(y), y, folds)
        else:
            def scorer(tr, te):
                model = train_penalty(pf[tr], y[tr], cfg.sgd)
                return score(model, pf[te]), model.penalty

            fold_aucs, oof, penalties = _cv(scorer, len(y), y, folds)
            meta["penalty"] = penalties
    else:
        grid = [(None, None)] if name == "deepwalk" else [(p, q) for p in cfg.node2vec_grid for q in cfg.node2vec_grid]
        ops = [op] if op else list(OPERATORS)
        best = None
        per_combo = {}
        for p, q in grid:
            emb = cache.get("skipgram", p, q)
            for o in ops:
                res = _classifier_cv(emb, pairs, y, folds, o, cfg.logreg)
                key = o if name == "deepwalk" else f"{o}@p={p},q={q}"
                per_combo[key] = float(np.mean(res[0]))
                if best is None or np.mean(res[0]) > np.mean(best[0][0]):
                    best = (res, o, p, q)
        (fold_aucs, oof, _), o, p, q = best
        meta.update(operator=o, mean_auc_by_choice=per_combo)
        if name == "node2vec":
            meta.update(return_p=p, inout_q=q)

    return EvaluationReport(
        method=method.lower(),
        fold_aucs=[float(a) for a in fold_aucs],
        pooled_auc=auc(oof, y),
        metadata=meta,
        scores=oof,
        seconds=time.perf_counter() - t0,
    )


def _merge(reports: Sequence[EvaluationReport]) -> EvaluationReport:
    first = reports[0]
    return EvaluationReport(
        method=first.method,
        fold_aucs=[a for r in reports for a in r.fold_aucs],
        pooled_auc=float(np.mean([r.pooled_auc for r in reports])),
        metadata={"repeats": [r.metadata for r in reports], "repeat_means": [r.mean for r in reports]},
        seconds=sum(r.seconds for r in reports),
    )


def run_experiment(g: Graph, methods: Iterable[str] = DEFAULT_METHODS, cfg: ExperimentConfig | None = None,
                   *, on_split=None) -> dict[str, EvaluationReport]:
    """Repeat split -> embed -> cross-validate ``cfg.repeats`` times.

    Repeat ``i`` uses seed ``cfg.seed + i`` for the split, the folds, the walks
    and the embedding, so every method sees the same pairs and folds. The
    per-method report pools fold AUCs over all repeats. ``on_split(i, split,
    cache, reports)`` is called after each repeat if given.
    """
    cfg = cfg or ExperimentConfig()
    methods = [m.lower() for m in methods]
    for m in methods:
        _split_method(m)
    per_method: dict[str, list] = {m: [] for m in methods}
    embed_seconds: dict[str, float] = {}
    ratio = cfg.effective_ratio(g)
    for i in range(cfg.repeats):
        seed = cfg.seed + i
        split = generate_split(g, ratio, seed, protect_forest=cfg.protect_forest)
        folds = k_fold(split.labels(), cfg.folds, seed)
        cache = EmbeddingCache(split.subgraph, cfg, seed)
        reports = {}
        for m in methods:
            reports[m] = run_method(split, folds, m, cache, cfg)
            per_method[m].append(reports[m])
        for key, sec in cache.seconds.items():
            k = key[0] if key[1] is None else f"{key[0]}(p={key[1]},q={key[2]})"
            embed_seconds[k] = embed_seconds.get(k, 0.0) + sec
        if on_split is not None:
            on_split(i, split, cache, reports)
    out = {m: _merge(rs) for m, rs in per_method.items()}
    for r in out.values():
        r.metadata["embedding_seconds"] = dict(embed_seconds)
        r.metadata["seeds"] = [cfg.seed + i for i in range(cfg.repeats)]
        r.metadata["ratio"] = ratio
    return out


# -- studies -----------------------------------------------------------------
def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    if not lo < hi or not step > 0:
        raise ValueError("need p_min < p_max and step > 0")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    grid = lo + step * np.arange(n)
    if not np.any(np.isclose(grid, 0.0, atol=1e-12)) and lo < 0 < hi:
        grid = np.sort(np.append(grid, 0.0))
    return np.round(grid, 12)


def penalty_sweep(emb, pairs, labels, p_min: float = -50.0, p_max: float = 50.0, step: float = 1.0) -> list[dict]:
    """AUC of ``(a + p) / b`` over a grid of fixed penalties (0 always included)."""
    pf = pair_features(emb, pairs, allow_zero=True)
    return [{"p": float(p), "auc": auc(score(p, pf), labels)} for p in _grid(p_min, p_max, step)]


def sparsity_sweep(g: Graph, fractions: Sequence[float], methods: Iterable[str] = ("adasim", "pa", "ra", "hei", "node2vec"),
                   cfg: ExperimentConfig | None = None, *, done=None, on_row=None) -> list[dict]:
    """Thin the graph by each fraction, then run the standard experiment.

    Infeasible fractions yield ``status="skipped"`` rows. ``done`` is a set of
    ``(fraction, method)`` keys to skip (resuming); ``on_row`` receives each
    row as it is produced.
    """
    cfg = cfg or ExperimentConfig()
    methods = [m.lower() for m in methods]
    done = done or set()
    rows = []

    def emit(row):
        rows.append(row)
        if on_row is not None:
            on_row(row)

    for frac in fractions:
        todo = [m for m in methods if (float(frac), m) not in done]
        if not todo:
            continue
        try:
            thin = sparsify(g, float(frac), cfg.seed)
            reports = run_experiment(thin, todo, cfg)
        except (InfeasibleRatioError, SplitError) as exc:
            for m in todo:
                emit({"fraction": float(frac), "method": m, "auc": float("nan"), "std": float("nan"),
                      "edges": "", "status": f"skipped: {exc}"})
            continue
        for m in todo:
            r = reports[m]
            emit({"fraction": float(frac), "method": m, "auc": r.mean, "std": r.std,
                  "edges": thin.edge_count, "status": "ok"})
    return rows


SENSITIVITY_PARAMS = {"d": "dim", "l": "walk_length", "k": "walks_per_node", "window": "window"}


def sensitivity_sweep(g: Graph, grids: dict, method: str = "adasim", cfg: ExperimentConfig | None = None,
                      *, done=None, on_row=None) -> list[dict]:
    """Vary one parameter at a time (``d``, ``l``, ``k`` or ``window``), others at ``cfg`` values."""
    cfg = cfg or ExperimentConfig()
    done = done or set()
    rows = []
    for param, values in grids.items():
        if param not in SENSITIVITY_PARAMS:
            raise ValueError(f"unknown parameter {param!r}; choose from {sorted(SENSITIVITY_PARAMS)}")
        for val in values:
            if (param, float(val)) in done:
                continue
            c = replace(cfg, **{SENSITIVITY_PARAMS[param]: int(val)})
            r = run_experiment(g, [method], c)[method]
            row = {"param": param, "value": val, "d": c.dim, "l": c.walk_length, "k": c.walks_per_node,
                   "window": c.window, "method": method, "auc": r.mean, "std": r.std}
            rows.append(row)
            if on_row is not None:
                on_row(row)
    return rows


def distance_histogram(g_s: Graph, positives) -> list[dict]:
    """Share of positive pairs at each geodesic distance in the residual graph.

    Pairs in different components go to an ``"inf"`` bucket. Rows are sorted by
    distance with ``"inf"`` last; probabilities sum to 1.
    """
    pos = np.asarray(positives, dtype=np.int64).reshape(-1, 2)
    if len(pos) == 0:
        raise ValueError("no positive pairs")
    counts: dict = {}
    for src in np.unique(pos[:, 0]):
        dist = bfs_distances(g_s, int(src))
        for d in dist[pos[pos[:, 0] == src, 1]].tolist():
            key = "inf" if d == UNREACHABLE else d
            counts[key] = counts.get(key, 0) + 1
    finite = sorted(k for k in counts if k != "inf")
    keys = finite + (["inf"] if "inf" in counts else [])
    return [{"s": k, "probability": counts[k] / len(pos), "count": counts[k]} for k in keys]


def edge_feature_correlation(g: Graph, walk_cfg: WalkConfig | None = None, train_cfg: TrainConfig | None = None) -> list[dict]:
    """Correlation between operator-built and directly learned edge vectors.

    One walk corpus is generated; node vectors are trained on it and edge
    vectors on the same walks rewritten as edge sequences. For every edge and
    operator the row holds the Pearson coefficient across dimensions (NaN when
    undefined, e.g. an edge that never occurs in the walks).
    """
    walk_cfg = walk_cfg or WalkConfig()
    train_cfg = train_cfg or TrainConfig(seed=walk_cfg.seed)
    corpus = generate_walks(g, walk_cfg)
    node_emb = train(corpus, train_cfg, g.labels)
    edge_corpus = derive_edge_sequences(corpus, g)
    edge_emb = train(edge_corpus, train_cfg)
    seen = edge_corpus.frequencies > 0
    rows = []
    for e, (u, v) in enumerate(g.edges().tolist()):
        for op in OPERATORS:
            heur = baselines.edge_features(node_emb, u, v, op)
            r = float("nan")
            if seen[e]:
                try:
                    r = pearson(heur, edge_emb.vectors[e])
                except CorrelationError:
                    pass
            rows.append({"edge": e, "u": g.labels[u], "v": g.labels[v], "operator": op, "pearson": r})
    return rows


# -- output ------------------------------------------------------------------
def write_csv(rows: Sequence[dict], path: str | os.PathLike, fieldnames: Sequence[str] | None = None,
              append: bool = False) -> Path:
    path = Path(path)
    if fieldnames is None:
        if not rows:
            raise ValueError("no rows and no fieldnames")
        fieldnames = list(rows[0])
    new = not (append and path.exists())
    with open(path, "a" if append else "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames)
        if new:
            w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return path


def write_summary(reports: dict, path: str | os.PathLike, **extra) -> Path:
    """JSON with per-method fold AUCs, timings and whatever ``extra`` holds."""
    doc = dict(_jsonable(extra))
    doc["methods"] = {m: r.as_dict() for m, r in reports.items()}
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, allow_nan=True) + "\n", encoding="utf-8")
    return path
