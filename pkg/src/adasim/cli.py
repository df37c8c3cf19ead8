"""Command-line interface: ``adasim <subcommand> ...``.

Every subcommand takes ``--seed`` (default 42, echoed on stderr) and
``--config FILE``, a JSON object whose keys are option names (dashes or
underscores). Values given on the command line override the file, which
overrides the built-in defaults.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import LogRegConfig
from .datasets import krackhardt_kite, load_graph
from .embedding import TrainConfig, load_embeddings, save_embeddings, train
from .evaluation import (
    DEFAULT_METHODS,
    METHODS,
    EmbeddingCache,
    ExperimentConfig,
    _grid,
    distance_histogram,
    edge_feature_correlation,
    penalty_sweep,
    run_experiment,
    run_method,
    sensitivity_sweep,
    sparsity_sweep,
    write_csv,
    write_summary,
)
from .graph import topology_report
from .model import SGDConfig, load_model, pair_features, save_model, save_trace, score, train_penalty
from .split import generate_split, k_fold, load_split, max_feasible_ratio, save_split
from .walks import WalkConfig, generate_walks, load_corpus, save_corpus

DEFAULT_SEED = 42
MANIFEST_VERSION = 1


class CLIError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


@contextlib.contextmanager
def stage(name: str):
    """Turn any failure inside the block into a CLIError naming the stage."""
    try:
        yield
    except CLIError:
        raise
    except FileNotFoundError as exc:
        raise CLIError(f"{name}: file not found: {exc.filename or exc}") from exc
    except Exception as exc:
        raise CLIError(f"{name}: {exc}") from exc


# -- shared helpers ----------------------------------------------------------
def _read_graph(path):
    if path in (None, "kite"):
        return krackhardt_kite()
    p = Path(path)
    if not p.exists():
        raise CLIError(f"graph file not found: {p}", 2)
    with stage(f"load graph {p}"):
        return load_graph(p)


def _methods(text: str) -> list[str]:
    out = [m.strip().lower() for m in text.split(",") if m.strip()]
    for m in out:
        if m.partition(":")[0] not in METHODS:
            raise CLIError(f"unknown method {m!r}; choose from {', '.join(METHODS)}", 2)
    return out


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CLIError(f"expected comma-separated numbers, got {text!r}", 2) from None


def _experiment_config(args) -> ExperimentConfig:
    return ExperimentConfig(
        ratio=args.ratio,
        folds=args.folds,
        repeats=args.repeats,
        seed=args.seed,
        dim=args.dim,
        walks_per_node=args.walks,
        walk_length=args.length,
        window=args.window,
        epochs=args.epochs,
        sgd=SGDConfig(learning_rate=args.lr, epochs=args.penalty_epochs, method=args.optimizer),
        protect_forest=not args.no_forest_protection,
        cap_ratio=args.cap_ratio,
        workers=args.jobs,
    )


def _prepare_outdir(out: Path, command: str, config: dict, resume: bool) -> dict:
    """Create ``out`` and check / write its ``run.json`` manifest."""
    out.mkdir(parents=True, exist_ok=True)
    path = out / "run.json"
    if path.exists() and resume:
        old = json.loads(path.read_text(encoding="utf-8"))
        if old.get("command") != command or old.get("config") != config:
            raise CLIError(f"{out} holds a run with a different configuration; use another --out or --overwrite", 2)
        return old
    manifest = {"version": MANIFEST_VERSION, "tool_version": __version__, "command": command,
                "config": config, "outputs": [], "complete": False}
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest


def _finish_manifest(out: Path, manifest: dict, outputs: list, **extra) -> None:
    manifest["outputs"] = sorted({str(Path(o).relative_to(out)) for o in outputs} | set(manifest.get("outputs", [])))
    manifest["complete"] = True
    manifest.update(extra)
    (out / "run.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _done_keys(path: Path, key_fields) -> set:
    if not path.exists():
        return set()
    with open(path, newline="", encoding="utf-8") as fh:
        return {tuple(k(row) for k in key_fields) for row in csv.DictReader(fh)}


def _print_table(rows: list[dict], cols: list[str], out=sys.stdout) -> None:
    def fmt(v):
        return f"{v:.4f}" if isinstance(v, float) else str(v)

    cells = [[fmt(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) if cells else len(c) for i, c in enumerate(cols)]
    print("  ".join(c.ljust(w) for c, w in zip(cols, widths)), file=out)
    for row in cells:
        print("  ".join(v.ljust(w) for v, w in zip(row, widths)), file=out)


def _report_rows(reports) -> list[dict]:
    # no timings: CSV output must be identical across reruns
    return [{k: v for k, v in r.row().items() if k != "seconds"} for r in reports.values()]


# -- subcommands -------------------------------------------------------------
def cmd_stats(args) -> int:
    g = _read_graph(args.graph)
    with stage("stats"):
        rep = topology_report(g, compute_diameter=args.diameter)
    d = rep.as_dict()
    if args.json:
        print(json.dumps(d, indent=2))
    else:
        width = max(len(k) for k in d)
        for k, v in d.items():
            val = "n/a" if v is None else (f"{v:.6g}" if isinstance(v, float) else v)
            print(f"{k.ljust(width)}  {val}")
    return 0


def cmd_split(args) -> int:
    g = _read_graph(args.graph)
    with stage("split"):
        r = args.ratio
        if args.cap_ratio:
            r = min(r, max_feasible_ratio(g, not args.no_forest_protection))
        split = generate_split(g, r, args.seed, protect_forest=not args.no_forest_protection)
        save_split(split, args.out)
    print(f"{len(split.positives)} positives, {len(split.negatives)} negatives (ratio {r:g}) -> {args.out}")
    return 0


def cmd_walk(args) -> int:
    g = _read_graph(args.graph)
    with stage("walk"):
        cfg = WalkConfig(args.walks, args.length, args.seed, args.p, args.q)
        corpus = generate_walks(g, cfg)
        save_corpus(corpus, args.out, g.labels)
    print(f"{len(corpus)} walks, {corpus.token_count} tokens -> {args.out}")
    return 0


def cmd_embed(args) -> int:
    g = _read_graph(args.graph)
    with stage("embed"):
        if args.corpus:
            corpus = load_corpus(args.corpus, g)
        else:
            corpus = generate_walks(g, WalkConfig(args.walks, args.length, args.seed, args.p, args.q))
        cfg = TrainConfig(dim=args.dim, window=args.window, epochs=args.epochs, seed=args.seed,
                          mode=args.mode, workers=args.jobs)
        emb = train(corpus, cfg, g.labels)
        save_embeddings(emb, args.out)
    print(f"{len(emb)} vectors of dimension {emb.dim} -> {args.out}")
    return 0


def _split_pairs_for(emb, split):
    # split ids follow the split's node order; map them to embedding rows by label
    index = {lab: i for i, lab in enumerate(emb.labels)}
    labels = split.subgraph.labels
    try:
        rows = np.array([[index[labels[u]], index[labels[v]]] for u, v in split.pairs().tolist()], dtype=np.int64)
    except KeyError as exc:
        raise CLIError(f"node {exc.args[0]} has no embedding vector") from None
    return rows.reshape(-1, 2)


def cmd_train(args) -> int:
    with stage("load split"):
        split = load_split(args.split)
    with stage("load embeddings"):
        emb = load_embeddings(args.embeddings)
    with stage("train"):
        pf = pair_features(emb, _split_pairs_for(emb, split), allow_zero=True)
        cfg = SGDConfig(learning_rate=args.lr, epochs=args.penalty_epochs, method=args.optimizer, seed=args.seed)
        model = train_penalty(pf, split.labels(), cfg)
        save_model(model, args.out)
        if args.trace:
            save_trace(model, args.trace)
    print(f"p = {model.penalty:.6g} after {len(model.losses) - 1} iterations -> {args.out}")
    return 0


def cmd_score(args) -> int:
    with stage("load embeddings"):
        emb = load_embeddings(args.embeddings)
    with stage("load model"):
        p = float(args.penalty) if args.penalty is not None else load_model(args.model).penalty
    index = {lab: i for i, lab in enumerate(emb.labels)}
    with stage("read pairs"):
        with open(args.pairs, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        try:
            ids = np.array([[index[r["u"]], index[r["v"]]] for r in rows], dtype=np.int64).reshape(-1, 2)
        except KeyError as exc:
            raise CLIError(f"{args.pairs}: unknown node or missing column {exc.args[0]!r}") from None
    with stage("score"):
        s = score(p, pair_features(emb, ids, allow_zero=True))
        out_rows = [{"u": r["u"], "v": r["v"], **({"label": r["label"]} if "label" in r else {}), "score": float(x)}
                    for r, x in zip(rows, s)]
        fields = ["u", "v"] + (["label"] if rows and "label" in rows[0] else []) + ["score"]
        write_csv(out_rows, args.out, fields)
    print(f"{len(out_rows)} pairs scored with p = {p:.6g} -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    with stage("load split"):
        split = load_split(args.split, seed=args.seed, ratio=args.ratio)
    cfg = _experiment_config(args)
    methods = _methods(args.methods)
    cache = EmbeddingCache(split.subgraph, cfg, args.seed)
    if args.embeddings:
        with stage("load embeddings"):
            emb = load_embeddings(args.embeddings)
            if list(emb.labels) != list(split.subgraph.labels):
                order = np.array([emb.labels.index(lab) for lab in split.subgraph.labels])
                emb = replace(emb, vectors=emb.vectors[order], labels=split.subgraph.labels)
            cache.put(emb, "cbow")
    folds = k_fold(split.labels(), cfg.folds, args.seed)
    reports = {}
    for m in methods:
        with stage(f"eval {m}"):
            reports[m] = run_method(split, folds, m, cache, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(_report_rows(reports), out / "report.csv")
    write_summary(reports, out / "summary.json", seed=args.seed, config=cfg.as_dict())
    _print_table(_report_rows(reports), ["method", "mean_auc", "std_auc"])
    return 0


def cmd_pipeline(args) -> int:
    g = _read_graph(args.graph)
    cfg = _experiment_config(args)
    methods = _methods(args.methods)
    out = Path(args.out)
    manifest = _prepare_outdir(out, "pipeline", {"graph": str(args.graph), "methods": methods, **cfg.as_dict()}, False)
    outputs = []

    def keep_first(i, split, cache, reports):
        if i != 0:
            return
        with stage("write split"):
            save_split(split, out / "split")
        emb = cache._store.get(("cbow", None, None))
        if emb is not None:
            with stage("write embeddings"):
                save_embeddings(emb, out / "embeddings.txt")
                pf = pair_features(emb, split.pairs(), allow_zero=True)
                save_model(train_penalty(pf, split.labels(), cfg.sgd), out / "model.txt")
                outputs.extend([out / "embeddings.txt", out / "model.txt"])
        rows = []
        pairs, y, labels = split.pairs(), split.labels(), split.subgraph.labels
        for m, r in reports.items():
            rows += [{"method": m, "u": labels[u], "v": labels[v], "label": int(t), "score": float(s)}
                     for (u, v), t, s in zip(pairs.tolist(), y, r.scores)]
        write_csv(rows, out / "scores.csv", ["method", "u", "v", "label", "score"])
        outputs.extend([out / "split" / "subgraph.edgelist", out / "split" / "positives.csv",
                        out / "split" / "negatives.csv", out / "scores.csv"])

    t0 = time.perf_counter()
    with stage("pipeline"):
        reports = run_experiment(g, methods, cfg, on_split=keep_first)
    rows = _report_rows(reports)
    outputs.append(write_csv(rows, out / "report.csv"))
    outputs.append(write_summary(reports, out / "summary.json", seed=args.seed, graph=str(args.graph),
                                 config=cfg.as_dict(), wall_seconds=time.perf_counter() - t0))
    _finish_manifest(out, manifest, outputs)
    _print_table(rows, ["method", "mean_auc", "std_auc"])
    return 0


def cmd_sweep(args) -> int:
    g = _read_graph(args.graph)
    cfg = _experiment_config(args)
    out = Path(args.out)
    kind = args.kind
    if kind == "penalty":
        conf = {"graph": str(args.graph), "min": args.min, "max": args.max, "step": args.step, **cfg.as_dict()}
        manifest = _prepare_outdir(out, "sweep penalty", conf, False)
        with stage("sweep penalty"):
            grid_check = _grid(args.min, args.max, args.step)
            split = generate_split(g, cfg.effective_ratio(g), args.seed, protect_forest=cfg.protect_forest)
            emb = EmbeddingCache(split.subgraph, cfg, args.seed).get("cbow")
            rows = penalty_sweep(emb, split.pairs(), split.labels(), args.min, args.max, args.step)
            trained = train_penalty(pair_features(emb, split.pairs(), allow_zero=True), split.labels(), cfg.sgd)
        path = write_csv(rows, out / "penalty.csv", ["p", "auc"])
        _finish_manifest(out, manifest, [path], trained_penalty=trained.penalty)
        print(f"{len(grid_check)} grid points, trained p = {trained.penalty:.6g} -> {path}")
        return 0

    methods = _methods(args.methods)
    if kind == "sparsity":
        fractions = _floats(args.fractions)
        conf = {"graph": str(args.graph), "methods": methods, **cfg.as_dict()}
        manifest = _prepare_outdir(out, "sweep sparsity", conf, not args.overwrite)
        path = out / "sparsity.csv"
        if args.overwrite and path.exists():
            path.unlink()
        done = _done_keys(path, [lambda r: float(r["fraction"]), lambda r: r["method"]])
        fields = ["fraction", "method", "auc", "std", "edges", "status"]
        with stage("sweep sparsity"):
            sparsity_sweep(g, fractions, methods, cfg, done=done,
                           on_row=lambda row: write_csv([row], path, fields, append=True))
        _finish_manifest(out, manifest, [path])
        print(f"sparsity sweep over {len(fractions)} fractions x {len(methods)} methods -> {path}")
        return 0

    # sensitivity
    if args.param is None or args.grid is None:
        raise CLIError("sweep sensitivity needs --param and --grid", 2)
    values = [int(v) for v in _floats(args.grid)]
    method = methods[0]
    conf = {"graph": str(args.graph), "method": method, "param": args.param, **cfg.as_dict()}
    manifest = _prepare_outdir(out, f"sweep sensitivity {args.param}", conf, not args.overwrite)
    path = out / f"sensitivity_{args.param}.csv"
    if args.overwrite and path.exists():
        path.unlink()
    done = _done_keys(path, [lambda r: r["param"], lambda r: float(r["value"])])
    fields = ["param", "value", "d", "l", "k", "window", "method", "auc", "std"]
    with stage("sweep sensitivity"):
        sensitivity_sweep(g, {args.param: values}, method, cfg, done=done,
                          on_row=lambda row: write_csv([row], path, fields, append=True))
    _finish_manifest(out, manifest, [path])
    print(f"sensitivity sweep of {args.param} over {len(values)} values -> {path}")
    return 0


def cmd_figure(args) -> int:
    g = _read_graph(args.graph)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "distance":
        with stage("figure distance"):
            r = min(args.ratio, max_feasible_ratio(g, True)) if args.cap_ratio else args.ratio
            split = generate_split(g, r, args.seed)
            rows = distance_histogram(split.subgraph, split.positives)
        write_csv(rows, out, ["s", "probability", "count"])
        near = sum(row["probability"] for row in rows if row["s"] != "inf" and row["s"] <= 3)
        print(f"share of positives at distance <= 3: {near:.4f} -> {out}")
    else:
        with stage("figure correlation"):
            rows = edge_feature_correlation(
                g,
                WalkConfig(args.walks, args.length, args.seed),
                TrainConfig(dim=args.dim, window=args.window, epochs=args.epochs, seed=args.seed),
            )
        write_csv(rows, out, ["edge", "u", "v", "operator", "pearson"])
        r = np.array([row["pearson"] for row in rows])
        print(f"{len(rows)} rows, share with |r| < 0.5: {np.mean(np.abs(r[~np.isnan(r)]) < 0.5):.3f} -> {out}")
    return 0


# -- parser ------------------------------------------------------------------
def _add_common(p):
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"master seed (default {DEFAULT_SEED})")
    p.add_argument("--config", help="JSON file of option defaults; command-line flags take precedence")
    p.add_argument("--jobs", type=int, default=1, help="training threads (default 1, deterministic)")


def _add_walk(p):
    p.add_argument("-k", "--walks", type=int, default=10, help="walks per node (default 10)")
    p.add_argument("-l", "--length", type=int, default=80, help="walk length (default 80)")
    p.add_argument("--p", type=float, default=None, help="return parameter for biased walks")
    p.add_argument("--q", type=float, default=None, help="in-out parameter for biased walks")


def _add_train(p):
    p.add_argument("-d", "--dim", type=int, default=128, help="embedding dimension (default 128)")
    p.add_argument("--window", type=int, default=10, help="context window (default 10)")
    p.add_argument("--epochs", type=int, default=1, help="passes over the corpus (default 1)")


def _add_penalty(p):
    p.add_argument("--optimizer", choices=("newton", "gd", "sgd"), default="newton")
    p.add_argument("--lr", type=float, default=0.1, help="learning rate for gd/sgd (default 0.1)")
    p.add_argument("--penalty-epochs", type=int, default=500, help="optimiser iterations (default 500)")


def _add_split(p):
    p.add_argument("-r", "--ratio", type=float, default=0.5, help="share of edges held out (default 0.5)")
    p.add_argument("--no-forest-protection", action="store_true", help="allow removing spanning-forest edges")
    p.add_argument("--cap-ratio", action="store_true", help="lower an infeasible ratio to the largest feasible one")


def _add_experiment(p, methods_default=",".join(DEFAULT_METHODS)):
    _add_split(p)
    _add_walk(p)
    _add_train(p)
    _add_penalty(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--repeats", type=int, default=10, help="splits with seeds seed, seed+1, ... (default 10)")
    p.add_argument("--methods", default=methods_default,
                   help="comma-separated: adasim, cosine, cn, ra, pa, si, cclp, hei, deepwalk[:op], node2vec[:op]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adasim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="topology summary of a graph")
    p.add_argument("graph")
    p.add_argument("--json", action="store_true", help="print a JSON object")
    p.add_argument("--diameter", action="store_true", help="also compute the diameter (all-pairs BFS)")
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="hold out edges and sample non-edges")
    p.add_argument("graph")
    p.add_argument("--out", required=True, help="output directory")
    _add_split(p)
    _add_common(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("walk", help="write a random-walk corpus")
    p.add_argument("graph")
    p.add_argument("--out", required=True)
    _add_walk(p)
    _add_common(p)
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("embed", help="train node embeddings")
    p.add_argument("graph")
    p.add_argument("--out", required=True)
    p.add_argument("--corpus", help="walk corpus file (default: generate walks)")
    p.add_argument("--mode", choices=("cbow", "skipgram"), default="cbow")
    _add_walk(p)
    _add_train(p)
    _add_common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("train", help="fit the penalty on a saved split")
    p.add_argument("--split", required=True, help="split directory")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--trace", help="CSV file for the loss per iteration")
    _add_penalty(p)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score node pairs with a trained model")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--pairs", required=True, help="CSV with columns u,v[,label]")
    p.add_argument("--out", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--model")
    g.add_argument("--penalty", type=float, help="use this penalty instead of a model file")
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="cross-validate methods on a saved split")
    p.add_argument("--split", required=True)
    p.add_argument("--embeddings", help="AdaSim embeddings (default: train on the split's subgraph)")
    p.add_argument("--out", required=True)
    _add_experiment(p)
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="split, embed, train and evaluate over repeats")
    p.add_argument("graph")
    p.add_argument("--out", required=True)
    _add_experiment(p)
    _add_common(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("sweep", help="penalty, sparsity or sensitivity study")
    p.add_argument("kind", choices=("penalty", "sparsity", "sensitivity"))
    p.add_argument("graph")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--min", type=float, default=-50.0)
    p.add_argument("--max", type=float, default=50.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--fractions", default="0.5,0.6,0.7,0.8")
    p.add_argument("--param", choices=("d", "l", "k", "window"))
    p.add_argument("--grid", help="comma-separated values for --param")
    p.add_argument("--overwrite", action="store_true", help="discard finished grid points instead of resuming")
    _add_experiment(p, methods_default="adasim")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", help="distance histogram or edge-feature correlation CSV")
    p.add_argument("kind", choices=("distance", "correlation"))
    p.add_argument("graph", nargs="?", default="kite", help="graph file (default: built-in kite graph)")
    p.add_argument("--out", required=True, help="CSV file")
    _add_split(p)
    _add_walk(p)
    _add_train(p)
    _add_common(p)
    p.set_defaults(func=cmd_figure)
    return parser


def _apply_config(parser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        conf = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CLIError(f"config file not found: {args.config}", 2) from None
    except json.JSONDecodeError as exc:
        raise CLIError(f"config file {args.config}: {exc}", 2) from None
    if not isinstance(conf, dict):
        raise CLIError(f"config file {args.config}: expected a JSON object", 2)
    conf = {k.replace("-", "_"): v for k, v in conf.items()}
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = sorted(set(conf) - known)
    if unknown:
        raise CLIError(f"config file {args.config}: unknown option(s) {', '.join(unknown)}", 2)
    sub.set_defaults(**conf)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        print(f"seed: {args.seed}", file=sys.stderr)
        return args.func(args)
    except CLIError as exc:
        print(f"adasim: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
