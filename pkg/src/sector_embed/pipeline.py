"""Pipeline stages. Each stage reads the previous stage's files from the run
directory, writes its own, and records itself in ``manifest.json``."""

from __future__ import annotations

import json
import logging
from collections import Counter
from pathlib import Path

from . import __version__
from . import analytics, classifier, contexts, corpus, embedder, synth
from .config import PipelineConfig
from .errors import ConfigurationError, ValidationError

logger = logging.getLogger(__name__)

STAGE_VERSION = "1"
EMBEDDING_KINDS = ("returns", "news", "multimodal")


class RunDir:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.root = cfg.output_dir

    def path(self, *parts: str) -> Path:
        p = self.root.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def need(self, *parts: str) -> Path:
        p = self.root.joinpath(*parts)
        if not p.exists():
            raise ConfigurationError(f"missing {p}; run the earlier pipeline stage first")
        return p

    def record(self, stage: str, outputs: list[Path], summary: dict) -> None:
        mpath = self.path("manifest.json")
        manifest = json.loads(mpath.read_text()) if mpath.exists() else {"stages": {}}
        manifest["package_version"] = __version__
        manifest["stages"][stage] = {
            "version": STAGE_VERSION,
            "config_hash": self.cfg.hash(),
            "outputs": sorted(str(p.relative_to(self.root)) for p in outputs),
            "summary": summary,
        }
        mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    # shared readers
    def universe(self) -> list[corpus.LabeledCompany]:
        return corpus.load_labels(self.need("ingest", "universe.csv"))

    def tickers(self) -> tuple[str, ...]:
        return tuple(c.ticker for c in self.universe())

    def embeddings(self, kind: str) -> embedder.EmbeddingMatrix:
        if kind not in EMBEDDING_KINDS:
            raise ConfigurationError(f"embedding must be one of {EMBEDDING_KINDS}, got {kind!r}")
        E = embedder.read_embeddings(self.need("embeddings", f"{kind}.tsv"))
        if E.tickers != self.tickers():
            raise ValidationError(f"{kind} embeddings do not match the ingested universe ordering")
        return E

    def available_embeddings(self) -> list[str]:
        return [k for k in EMBEDDING_KINDS if (self.root / "embeddings" / f"{k}.tsv").exists()]


def cmd_synth(cfg: PipelineConfig) -> dict:
    market = synth.generate(cfg.synth)
    paths = [cfg.resolve(cfg.paths.prices), cfg.resolve(cfg.paths.news), cfg.resolve(cfg.paths.labels)]
    synth.write_market(market, *paths)
    return {"companies": len(market.companies), "days": cfg.synth.n_days,
            "articles": len(market.articles), "files": [str(p) for p in paths]}


def cmd_ingest(cfg: PipelineConfig) -> dict:
    run = RunDir(cfg)
    for key in ("prices", "news", "labels"):
        p = cfg.resolve(getattr(cfg.paths, key))
        if not p.exists():
            raise ConfigurationError(f"paths.{key} does not exist: {p}")
    panel = corpus.load_prices(cfg.resolve(cfg.paths.prices), cfg.paths.price_format)
    labels = corpus.load_labels(cfg.resolve(cfg.paths.labels))
    articles = corpus.load_news(cfg.resolve(cfg.paths.news), cfg.universe.ticker_pattern, panel.tickers)
    sel = corpus.build_universe(panel, articles, labels, cfg.universe.min_mentions)

    out = [run.path("ingest", "universe.csv"), run.path("ingest", "prices.csv"), run.path("ingest", "articles.jsonl")]
    corpus.write_labels(out[0], sel.companies)
    corpus.write_prices(out[1], sel.panel)
    corpus.write_articles(out[2], sel.articles, sel.tickers)
    sectors = Counter(c.sector1 for c in sel.companies)
    summary = {"companies": len(sel.companies), "dates": len(sel.panel.dates),
               "articles": len(sel.articles), "sectors": dict(sorted(sectors.items()))}
    run.record("ingest", out, summary)
    return summary


def cmd_contexts(cfg: PipelineConfig) -> dict:
    run = RunDir(cfg)
    tickers = run.tickers()
    panel = corpus.load_prices(run.need("ingest", "prices.csv"), "long")
    if panel.tickers != tickers:
        raise ValidationError("ingested prices do not match the universe")
    returns = corpus.compute_returns(panel)
    gen = contexts.ContextGenConfig(cfg.contexts.context_size, cfg.contexts.iqr_filter)
    rsets = contexts.returns_context_sets(returns, gen)
    nsets = contexts.news_context_sets(corpus.read_articles(run.need("ingest", "articles.jsonl"), tickers), tickers)
    out = [run.path("contexts", "returns.jsonl"), run.path("contexts", "news.jsonl")]
    contexts.write_context_sets(out[0], rsets, tickers)
    contexts.write_context_sets(out[1], nsets, tickers)
    total = len(tickers) * returns.shape[1]
    summary = {"returns_sets": len(rsets), "news_sets": len(nsets),
               "returns_candidates": total, "iqr_retention": len(rsets) / total if total else 0.0}
    run.record("contexts", out, summary)
    return summary


def cmd_train(cfg: PipelineConfig, modality: str = "both") -> dict:
    if modality not in ("returns", "news", "both"):
        raise ConfigurationError(f"modality must be returns, news or both, got {modality!r}")
    run = RunDir(cfg)
    tickers = run.tickers()
    todo = ["returns", "news"] if modality == "both" else [modality]
    out, summary = [], {}
    for kind in todo:
        sets = contexts.read_context_sets(run.need("contexts", f"{kind}.jsonl"), tickers)
        tcfg = cfg.train_returns if kind == "returns" else cfg.train_news
        if not sets:
            raise ValidationError(f"no {kind} context sets to train on")
        res = embedder.train(sets, tickers, tcfg)
        e_path, l_path = run.path("embeddings", f"{kind}.tsv"), run.path("embeddings", f"loss_{kind}.csv")
        embedder.write_embeddings(e_path, res.embeddings)
        embedder.write_loss_trace(l_path, res.loss_trace)
        out += [e_path, l_path]
        summary[kind] = {"sets": len(sets), "final_loss": res.loss_trace[-1] if res.loss_trace else None}
    if all((run.root / "embeddings" / f"{k}.tsv").exists() for k in ("returns", "news")):
        E = embedder.concat_embeddings(run.embeddings("returns"), run.embeddings("news"), cfg.multimodal.normalize)
        m_path = run.path("embeddings", "multimodal.tsv")
        embedder.write_embeddings(m_path, E)
        out.append(m_path)
        summary["multimodal_dim"] = E.dim
    run.record(f"train:{modality}", out, summary)
    return summary


def cmd_knn(cfg: PipelineConfig, query: str | None = None, k: int | None = None,
            embedding: str = "multimodal") -> dict:
    run = RunDir(cfg)
    query = query or cfg.analytics.query
    if not query:
        raise ConfigurationError("knn needs a query ticker (--query or analytics.query)")
    k = k or cfg.analytics.knn_k
    E = run.embeddings(embedding)
    hits = analytics.knn(E, query, k, cfg.analytics.metric)
    labels = run.universe()
    table = analytics.format_knn_table(query, hits, labels)
    out = [run.path("analytics", f"knn_{embedding}_{query}.json"), run.path("analytics", f"knn_{embedding}_{query}.txt")]
    out[0].write_text(analytics.knn_to_json(query, hits, cfg.analytics.metric) + "\n")
    out[1].write_text(table)
    run.record(f"knn:{embedding}:{query}", out, {"neighbors": hits})
    return {"table": table, "neighbors": hits}


def cmd_graph(cfg: PipelineConfig, embedding: str | None = None) -> dict:
    run = RunDir(cfg)
    kinds = [embedding] if embedding else run.available_embeddings()
    labels = run.universe()
    out, summary = [], {}
    for kind in kinds:
        S = analytics.similarity_matrix(run.embeddings(kind))
        edges = analytics.export_graph(S, cfg.analytics.graph_threshold)
        p = run.path("analytics", f"edges_{kind}.csv")
        analytics.write_edges_csv(p, edges)
        out.append(p)
        if cfg.analytics.gexf:
            g = run.path("analytics", f"graph_{kind}.gexf")
            analytics.write_gexf(g, edges, S.tickers, labels)
            out.append(g)
        sector = {c.ticker: c.sector1 for c in labels}
        same = sum(sector[e.source] == sector[e.target] for e in edges.edges)
        summary[kind] = {"edges": len(edges.edges), "density": edges.density,
                         "intra_sector_fraction": same / len(edges.edges) if edges.edges else None}
    run.record("graph", out, summary)
    return summary


def cmd_mismatch(cfg: PipelineConfig, embedding: str = "multimodal") -> dict:
    run = RunDir(cfg)
    S = analytics.similarity_matrix(run.embeddings(embedding))
    rows = analytics.mismatches(S, run.universe(), cfg.analytics.mismatch_min_sim, cfg.analytics.mismatch_level)
    p = run.path("analytics", f"mismatches_{embedding}.csv")
    analytics.write_mismatches_csv(p, rows)
    run.record(f"mismatch:{embedding}", [p], {"pairs": len(rows)})
    return {"pairs": len(rows), "top": rows[:10]}


def _dataset(run: RunDir, kind: str) -> classifier.Dataset:
    E = run.embeddings(kind)
    labels = run.universe()
    return classifier.Dataset.from_labels(E.W, [c.sector1 for c in labels])


def cmd_classify(cfg: PipelineConfig, embedding: str = "all") -> dict:
    run = RunDir(cfg)
    kinds = list(EMBEDDING_KINDS) if embedding == "all" else [embedding]
    c = cfg.classify
    params = classifier.SVMParams(c.reg_lambda, c.epochs, c.lr, c.seed)
    out, rows = [], {}
    for kind in kinds:
        data = _dataset(run, kind)
        rep = classifier.kfold_cv(data, c.k_folds, c.use_smote, c.seed, params,
                                  smote_k=c.smote_k, standardize=c.standardize)
        pj, pt = run.path("reports", f"cv_{kind}.json"), run.path("reports", f"cv_{kind}.txt")
        pj.write_text(rep.to_json() + "\n")
        pt.write_text(rep.format_table())
        out += [pj, pt]
        rows[kind] = {"precision": rep.weighted_avg[0], "recall": rep.weighted_avg[1],
                      "f1": rep.weighted_avg[2], "accuracy": rep.accuracy}
        if c.holdout:
            hold = classifier.holdout_eval(data, c.test_fraction, c.seed, params, c.use_smote,
                                           c.smote_k, c.standardize)
            hj, ht = run.path("reports", f"holdout_{kind}.json"), run.path("reports", f"holdout_{kind}.txt")
            hj.write_text(hold.to_json() + "\n")
            ht.write_text(hold.format_table())
            out += [hj, ht]
    table = format_comparison(rows, c.k_folds)
    sp = run.path("reports", f"summary_{embedding}.txt")
    sp.write_text(table)
    out.append(sp)
    run.record(f"classify:{embedding}", out, rows)
    return {"table": table, "rows": rows}


def format_comparison(rows: dict, k: int) -> str:
    names = {"returns": "Returns Embedding", "news": "News Embedding", "multimodal": "Multimodal Embedding"}
    lines = [f"{k}-fold cross validation",
             f"{'Model':<22}{'Precision':>10}{'Recall':>8}{'F1':>6}{'Accuracy':>10}"]
    for kind, r in rows.items():
        lines.append(f"{names.get(kind, kind):<22}{r['precision']:>10.2f}{r['recall']:>8.2f}"
                     f"{r['f1']:>6.2f}{r['accuracy']:>9.0%} ")
    return "\n".join(lines) + "\n"


def run_all(cfg: PipelineConfig) -> dict:
    """Every stage after ``synth``, in order."""
    return {
        "ingest": cmd_ingest(cfg),
        "contexts": cmd_contexts(cfg),
        "train": cmd_train(cfg, "both"),
        "graph": cmd_graph(cfg),
        "mismatch": cmd_mismatch(cfg),
        "classify": cmd_classify(cfg, "all"),
    }
