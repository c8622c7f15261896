"""Similarity search, mismatch detection and graph export over embeddings."""

from __future__ import annotations

import csv
import difflib
import json
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import LabeledCompany
from .embedder import EmbeddingMatrix
from .errors import ConfigurationError, UnknownTickerError, ValidationError

METRICS = ("cosine", "euclidean", "dot")


@dataclass(frozen=True)
class SimilarityMatrix:
    tickers: tuple[str, ...]
    S: np.ndarray

    def __post_init__(self):
        S = np.array(self.S, dtype=np.float64)
        if S.shape != (len(self.tickers), len(self.tickers)):
            raise ValidationError(f"similarity matrix shape {S.shape} does not match {len(self.tickers)} tickers")
        if not np.array_equal(S, S.T):
            raise ValidationError("similarity matrix must be exactly symmetric")
        S.setflags(write=False)
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "S", S)

    def __getitem__(self, pair):
        a, b = pair
        return float(self.S[self.tickers.index(a), self.tickers.index(b)])


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    weight: float


@dataclass(frozen=True)
class EdgeList:
    edges: tuple[Edge, ...]
    threshold: float
    n_nodes: int

    @property
    def n_pairs(self) -> int:
        return self.n_nodes * (self.n_nodes - 1) // 2

    @property
    def density(self) -> float:
        return len(self.edges) / self.n_pairs if self.n_pairs else 0.0

    def pairs(self) -> set[tuple[str, str]]:
        return {(e.source, e.target) for e in self.edges}


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValidationError(f"vector shapes differ: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValidationError("cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def _unit_rows(E: EmbeddingMatrix) -> np.ndarray:
    norms = np.linalg.norm(E.W, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValidationError(f"zero embedding for {[E.tickers[i] for i in zero]}")
    return E.W / norms[:, None]


def similarity_matrix(E: EmbeddingMatrix) -> SimilarityMatrix:
    X = _unit_rows(E)
    G = np.clip(X @ X.T, -1.0, 1.0)
    # mirror the upper triangle so symmetry is exact
    S = np.triu(G, 1)
    S = S + S.T
    np.fill_diagonal(S, 1.0)
    return SimilarityMatrix(E.tickers, S)


def _lookup(tickers: Sequence[str], query: str) -> int:
    try:
        return tickers.index(query)
    except ValueError:
        close = difflib.get_close_matches(query.upper(), tickers, n=1, cutoff=0.0)
        raise UnknownTickerError(query, close[0] if close else None) from None


def knn(E: EmbeddingMatrix, query: str, k: int = 3, metric: str = "cosine") -> list[tuple[str, float]]:
    """The ``k`` companies most similar to ``query``, best first.

    ``metric`` is ``cosine`` (default), ``dot`` or ``euclidean``; for the
    latter the returned score is the distance and smaller ranks higher.
    Equal scores are ordered by ticker.
    """
    if metric not in METRICS:
        raise ConfigurationError(f"unknown metric {metric!r}; choose from {METRICS}")
    q = _lookup(E.tickers, query)
    n = len(E.tickers)
    if not 1 <= k < n:
        raise ConfigurationError(f"k must be in [1, {n - 1}], got {k}")
    if metric == "cosine":
        X = _unit_rows(E)
        scores = np.clip(X @ X[q], -1.0, 1.0)
        key = -scores
    elif metric == "dot":
        scores = E.W @ E.W[q]
        key = -scores
    else:
        scores = np.linalg.norm(E.W - E.W[q], axis=1)
        key = scores
    others = [i for i in range(n) if i != q]
    others.sort(key=lambda i: (key[i], E.tickers[i]))
    return [(E.tickers[i], float(scores[i])) for i in others[:k]]


def _sector_lookup(labels: Sequence[LabeledCompany], level: str) -> dict[str, str]:
    if level not in ("sector1", "sector2"):
        raise ConfigurationError(f"level must be sector1 or sector2, got {level!r}")
    return {c.ticker: getattr(c, level) for c in labels}


def mismatches(S: SimilarityMatrix, labels: Sequence[LabeledCompany], min_sim: float,
               level: str = "sector1") -> list[tuple[str, str, float, str, str]]:
    """Cross-sector pairs with similarity >= ``min_sim``, most similar first."""
    sector = _sector_lookup(labels, level)
    missing = [t for t in S.tickers if t not in sector]
    if missing:
        raise ValidationError(f"no label for {missing[:10]}")
    iu, ju = np.triu_indices(len(S.tickers), 1)
    out = []
    for i, j in zip(iu.tolist(), ju.tolist()):
        s = S.S[i, j]
        a, b = S.tickers[i], S.tickers[j]
        if s >= min_sim and sector[a] != sector[b]:
            if b < a:
                a, b = b, a
            out.append((a, b, float(s), sector[a], sector[b]))
    out.sort(key=lambda r: (-r[2], r[0], r[1]))
    return out


def export_graph(S: SimilarityMatrix, threshold: float = 0.6) -> EdgeList:
    """One edge per unordered pair with similarity strictly above ``threshold``."""
    iu, ju = np.triu_indices(len(S.tickers), 1)
    vals = S.S[iu, ju]
    hit = vals > threshold
    edges = []
    for i, j, s in zip(iu[hit].tolist(), ju[hit].tolist(), vals[hit].tolist()):
        a, b = S.tickers[i], S.tickers[j]
        if b < a:
            a, b = b, a
        edges.append(Edge(a, b, float(s)))
    edges.sort(key=lambda e: (e.source, e.target))
    return EdgeList(tuple(edges), float(threshold), len(S.tickers))


def density_threshold(S: SimilarityMatrix, target_density: float) -> float:
    """Smallest threshold leaving at most ``target_density`` of all pairs as edges."""
    if not 0 < target_density <= 1:
        raise ConfigurationError(f"target_density must be in (0, 1], got {target_density}")
    iu, ju = np.triu_indices(len(S.tickers), 1)
    vals = np.sort(S.S[iu, ju])[::-1]
    allowed = math.floor(target_density * vals.size + 1e-9)
    if allowed >= vals.size:
        return -1.0
    return float(vals[allowed])


# ---------------------------------------------------------------------------
# output formats


def write_edges_csv(path, edges: EdgeList) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "weight"])
        for e in edges.edges:
            w.writerow([e.source, e.target, format(e.weight, ".17g")])


def write_gexf(path, edges: EdgeList, nodes: Sequence[str],
               labels: Sequence[LabeledCompany] | None = None) -> None:
    """Minimal GEXF 1.2 graph with an optional ``sector`` node attribute."""
    by_ticker = {c.ticker: c for c in labels or ()}
    root = ET.Element("gexf", xmlns="http://www.gexf.net/1.2draft", version="1.2")
    graph = ET.SubElement(root, "graph", defaultedgetype="undirected")
    attrs = ET.SubElement(graph, "attributes", {"class": "node"})
    ET.SubElement(attrs, "attribute", id="0", title="sector", type="string")
    xnodes = ET.SubElement(graph, "nodes")
    for t in nodes:
        c = by_ticker.get(t)
        node = ET.SubElement(xnodes, "node", id=t, label=c.name if c else t)
        if c:
            vals = ET.SubElement(node, "attvalues")
            ET.SubElement(vals, "attvalue", {"for": "0", "value": c.sector1})
    xedges = ET.SubElement(graph, "edges")
    for k, e in enumerate(edges.edges):
        ET.SubElement(xedges, "edge", id=str(k), source=e.source, target=e.target,
                      weight=format(e.weight, ".17g"))
    ET.indent(root)
    ET.ElementTree(root).write(path, encoding="utf-8", xml_declaration=True)


def format_knn_table(query: str, neighbours: Sequence[tuple[str, float]],
                     labels: Sequence[LabeledCompany] | None = None) -> str:
    by_ticker = {c.ticker: c for c in labels or ()}

    def describe(t):
        c = by_ticker.get(t)
        return f"{c.name} - {c.sector1} - {c.sector2}" if c else t

    rows = [(describe(t), f"{s:.2f}") for t, s in neighbours]
    width = max([len("Neighbor"), *(len(r[0]) for r in rows)])
    lines = [f"Query: {describe(query)}", f"{'Neighbor':<{width}}  Similarity"]
    lines += [f"{name:<{width}}  {sim:>10}" for name, sim in rows]
    return "\n".join(lines) + "\n"


def knn_to_json(query: str, neighbours: Sequence[tuple[str, float]], metric: str = "cosine") -> str:
    return json.dumps({"query": query, "metric": metric,
                       "neighbors": [{"ticker": t, "score": s} for t, s in neighbours]}, indent=2)


def write_mismatches_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ticker_a", "ticker_b", "similarity", "sector_a", "sector_b"])
        for a, b, s, sa, sb in rows:
            w.writerow([a, b, format(s, ".17g"), sa, sb])
