"""Target:context training sets from returns and from news co-mentions."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import NewsArticle, ReturnsPanel
from .errors import ConfigurationError, ParseError, ValidationError

RETURNS = "returns"
NEWS = "news"
MODALITIES = (RETURNS, NEWS)


@dataclass(frozen=True)
class ContextSet:
    """One training example: predict ``target`` from the mean of ``context``.

    ``origin`` is the date (or time index) for returns sets and the article
    id for news sets.
    """

    target: int
    context: tuple[int, ...]
    modality: str
    origin: object = None

    def __post_init__(self):
        context = tuple(int(c) for c in self.context)
        object.__setattr__(self, "context", context)
        object.__setattr__(self, "target", int(self.target))
        if self.modality not in MODALITIES:
            raise ValidationError(f"unknown modality {self.modality!r}")
        if not context:
            raise ValidationError("context must be nonempty")
        if len(set(context)) != len(context):
            raise ValidationError(f"duplicate context companies {context}")
        if self.target in context:
            raise ValidationError(f"target {self.target} appears in its own context")


@dataclass(frozen=True)
class ContextGenConfig:
    context_size: int = 3
    iqr_filter: bool = True
    tie_break: str = "ticker"

    def __post_init__(self):
        if self.context_size < 1:
            raise ConfigurationError(f"context_size must be positive, got {self.context_size}")
        if self.tie_break != "ticker":
            raise ConfigurationError(f"unsupported tie_break {self.tie_break!r}")


def daily_quartiles(column) -> tuple[float, float]:
    """25th and 75th percentiles, linearly interpolated between order statistics."""
    x = np.asarray(column, dtype=np.float64)
    if x.ndim != 1 or x.size < 4:
        raise ValidationError(f"need at least 4 values for quartiles, got {x.size}")
    q1, q3 = np.percentile(x, [25.0, 75.0], method="linear")
    return float(q1), float(q3)


def _ticker_rank(tickers: Sequence[str]) -> np.ndarray:
    rank = np.empty(len(tickers), dtype=np.int64)
    rank[np.argsort(np.asarray(tickers, dtype=object), kind="stable")] = np.arange(len(tickers))
    return rank


def returns_context_sets(returns: ReturnsPanel, cfg: ContextGenConfig = ContextGenConfig()) -> list[ContextSet]:
    """For every (day, company) pick the ``C`` companies with closest return.

    Closeness is the absolute return difference; ties go to the
    lexicographically smaller ticker. With ``cfg.iqr_filter`` only targets
    whose return lies strictly outside that day's interquartile range are
    kept. Output is ordered by day, then target ticker.
    """
    r = returns.returns
    n, T = r.shape
    C = cfg.context_size
    if C >= n:
        raise ConfigurationError(f"context_size {C} must be smaller than the universe ({n})")
    rank = _ticker_rank(returns.tickers)
    by_ticker = np.argsort(rank)
    rank_grid = np.broadcast_to(rank, (n, n))
    out: list[ContextSet] = []
    for t in range(T):
        col = r[:, t]
        if cfg.iqr_filter:
            q1, q3 = daily_quartiles(col)
            active = (col < q1) | (col > q3)
        else:
            active = np.ones(n, dtype=bool)
        dist = np.abs(col[:, None] - col[None, :])
        np.fill_diagonal(dist, np.inf)
        # primary key last: distance, then ticker rank
        order = np.lexsort((rank_grid, dist), axis=-1)[:, :C]
        origin = returns.dates[t].isoformat() if returns.dates is not None else t
        for i in by_ticker:
            if active[i]:
                out.append(ContextSet(int(i), tuple(order[i].tolist()), RETURNS, origin))
    return out


def news_context_sets(articles: Iterable[NewsArticle], tickers: Sequence[str] | None = None) -> list[ContextSet]:
    """Each company in an article with n >= 2 mentions becomes a target once,
    with the other n - 1 companies (in mention order) as its context.

    Sets are ordered by article id, then target ticker (target index when
    ``tickers`` is not given).
    """
    out: list[ContextSet] = []
    for a in sorted(articles, key=lambda a: a.article_id):
        m = list(dict.fromkeys(a.mentions))
        if len(m) < 2:
            continue
        targets = sorted(m, key=(lambda i: tickers[i]) if tickers is not None else None)
        for target in targets:
            out.append(ContextSet(target, tuple(c for c in m if c != target), NEWS, a.article_id))
    return out


def iqr_retention(returns: ReturnsPanel, cfg: ContextGenConfig) -> float:
    """Fraction of (company, day) pairs that survive the IQR filter."""
    n, T = returns.shape
    if T == 0:
        return 0.0
    kept = 0
    for t in range(T):
        col = returns.returns[:, t]
        q1, q3 = daily_quartiles(col)
        kept += int(np.count_nonzero((col < q1) | (col > q3)))
    return kept / (n * T)


def write_context_sets(path, sets: Iterable[ContextSet], tickers: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sets:
            rec = {
                "target": tickers[s.target],
                "context": [tickers[c] for c in s.context],
                "modality": s.modality,
                "origin": s.origin,
            }
            fh.write(json.dumps(rec) + "\n")


def read_context_sets(path, tickers: Sequence[str]) -> list[ContextSet]:
    index = {t: i for i, t in enumerate(tickers)}
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(ContextSet(index[rec["target"]], tuple(index[c] for c in rec["context"]),
                                      rec["modality"], rec.get("origin")))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ParseError(f"bad context set record: {exc}", path, lineno) from None
    return out
