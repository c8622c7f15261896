"""Synthetic markets with planted sector structure.

Returns inside a sector share a common factor so that any two members have
correlation ``intra_sector_return_correlation``; news articles draw all of
their companies from one sector with probability ``co_mention_bias`` and
uniformly from the whole universe otherwise.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import LabeledCompany, PricePanel, write_labels, write_prices
from .errors import ConfigurationError

SECTOR_NAMES = (
    "Capital Goods", "Consumer Non-Durables", "Consumer Services", "Energy",
    "Finance", "Health Care", "Technology",
)
EXCHANGES = ("N", "O")


@dataclass(frozen=True)
class SyntheticSpec:
    n_sectors: int = 4
    companies_per_sector: int = 10
    n_days: int = 250
    n_articles: int = 400
    intra_sector_return_correlation: float = 0.9
    co_mention_bias: float = 0.9
    seed: int = 0
    daily_volatility: float = 0.02
    min_mentions_per_article: int = 2
    max_mentions_per_article: int = 4
    subsectors_per_sector: int = 2

    def __post_init__(self):
        if self.n_sectors < 1 or self.companies_per_sector < 1:
            raise ConfigurationError("need at least one sector and one company per sector")
        if self.n_companies > 500 or self.n_days > 5000:
            raise ConfigurationError("synthetic spec exceeds desk scale (500 companies, 5000 days)")
        if self.n_days < 1 or self.n_articles < 0:
            raise ConfigurationError("n_days must be >= 1 and n_articles >= 0")
        if not 0.0 <= self.intra_sector_return_correlation < 1.0:
            raise ConfigurationError("intra_sector_return_correlation must be in [0, 1)")
        if not 0.0 <= self.co_mention_bias <= 1.0:
            raise ConfigurationError("co_mention_bias must be in [0, 1]")
        if not 1 <= self.min_mentions_per_article <= self.max_mentions_per_article:
            raise ConfigurationError("bad mentions-per-article range")
        if self.max_mentions_per_article > self.n_companies:
            raise ConfigurationError("max_mentions_per_article exceeds universe size")

    @property
    def n_companies(self) -> int:
        return self.n_sectors * self.companies_per_sector


@dataclass(frozen=True)
class SyntheticMarket:
    companies: tuple[LabeledCompany, ...]
    panel: PricePanel
    articles: tuple[dict, ...]  # {"id", "date", "text"} records
    sector_of: np.ndarray  # sector index per company, aligned with companies


def _sector_name(k: int) -> str:
    return SECTOR_NAMES[k] if k < len(SECTOR_NAMES) else f"Sector {k + 1}"


def _make_tickers(rng: np.random.Generator, n: int) -> list[str]:
    letters = np.array(list("ABCDEFGHIJKLMNOPQRSTUVWXYZ"))
    seen: set[str] = set()
    out = []
    while len(out) < n:
        t = "".join(rng.choice(letters, size=4))
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def _business_days(start: dt.date, n: int) -> list[dt.date]:
    days, d = [], start
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days


def generate(spec: SyntheticSpec) -> SyntheticMarket:
    """Build a market in memory. Companies are returned sorted by ticker."""
    rng = np.random.default_rng(spec.seed)
    n, S = spec.n_companies, spec.n_sectors
    tickers = _make_tickers(rng, n)
    sector_of = np.repeat(np.arange(S), spec.companies_per_sector)
    sub_of = np.tile(np.arange(spec.companies_per_sector) % spec.subsectors_per_sector, S)

    rho = spec.intra_sector_return_correlation
    factors = rng.standard_normal((S, spec.n_days))
    noise = rng.standard_normal((n, spec.n_days))
    returns = spec.daily_volatility * (np.sqrt(rho) * factors[sector_of] + np.sqrt(1 - rho) * noise)
    p0 = rng.uniform(20.0, 200.0, size=n)
    prices = np.hstack([p0[:, None], p0[:, None] * np.cumprod(1.0 + returns, axis=1)])
    dates = _business_days(dt.date(2006, 1, 2), spec.n_days + 1)

    members = [np.flatnonzero(sector_of == k) for k in range(S)]
    names = [f"{t.title()} Holdings" for t in tickers]
    exch = rng.choice(len(EXCHANGES), size=n)
    articles = []
    for a in range(spec.n_articles):
        m = int(rng.integers(spec.min_mentions_per_article, spec.max_mentions_per_article + 1))
        if rng.random() < spec.co_mention_bias:
            pool = members[int(rng.integers(S))]
        else:
            pool = np.arange(n)
        picked = rng.choice(pool, size=min(m, len(pool)), replace=False)
        phrases = [f"{names[i]} ({tickers[i]}.{EXCHANGES[exch[i]]})" for i in picked]
        text = "Shares of " + ", ".join(phrases[:-1]) + (" and " if len(phrases) > 1 else "") + \
            phrases[-1] + " moved on the session."
        day = dates[int(rng.integers(len(dates)))]
        articles.append({"id": f"a{a:06d}", "date": day.isoformat(), "text": text})

    order = np.argsort(np.asarray(tickers))
    companies = tuple(
        LabeledCompany(tickers[i], names[i], _sector_name(int(sector_of[i])),
                       f"{_sector_name(int(sector_of[i]))} / Group {int(sub_of[i]) + 1}")
        for i in order
    )
    panel = PricePanel(tuple(tickers[i] for i in order), tuple(dates), prices[order])
    return SyntheticMarket(companies, panel, tuple(articles), sector_of[order])


def write_market(market: SyntheticMarket, prices_path, news_path, labels_path) -> None:
    for p in (prices_path, news_path, labels_path):
        Path(p).parent.mkdir(parents=True, exist_ok=True)
    write_prices(prices_path, market.panel)
    write_labels(labels_path, market.companies)
    with open(news_path, "w", encoding="utf-8") as fh:
        for rec in market.articles:
            fh.write(json.dumps(rec) + "\n")
