"""Price panels, news articles, ticker extraction and universe filtering."""

from __future__ import annotations

import csv
import datetime as dt
import functools
import json
import logging
import math
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, DataWarning, ParseError, ValidationError

logger = logging.getLogger(__name__)

#: Reuters style, e.g. "JPMorgan Chase & Co (JPM.N)".
DEFAULT_TICKER_PATTERN = r"\(([A-Z]{1,5})\.[A-Z]\)"

_TICKER_RE = re.compile(r"^[A-Z]{1,5}$")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LabeledCompany:
    ticker: str
    name: str
    sector1: str
    sector2: str

    def __post_init__(self):
        if not _TICKER_RE.match(self.ticker):
            raise ValidationError(f"ticker must be 1-5 uppercase letters, got {self.ticker!r}")


@dataclass(frozen=True)
class PricePanel:
    """Complete ticker x date matrix of closing prices."""

    tickers: tuple[str, ...]
    dates: tuple[dt.date, ...]
    prices: np.ndarray

    def __post_init__(self):
        prices = np.array(self.prices, dtype=np.float64)
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "dates", tuple(self.dates))
        if prices.shape != (len(self.tickers), len(self.dates)):
            raise ValidationError(
                f"price matrix has shape {prices.shape}, expected "
                f"{(len(self.tickers), len(self.dates))}"
            )
        if len(set(self.tickers)) != len(self.tickers):
            raise ValidationError("duplicate tickers in price panel")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValidationError("price panel dates must be strictly increasing")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            raise ValidationError("price panel contains missing or non-positive prices")
        object.__setattr__(self, "prices", _readonly(prices))

    @property
    def shape(self) -> tuple[int, int]:
        return self.prices.shape

    def subset(self, tickers: Sequence[str]) -> "PricePanel":
        pos = {t: i for i, t in enumerate(self.tickers)}
        rows = [pos[t] for t in tickers]
        return PricePanel(tuple(tickers), self.dates, self.prices[rows])


@dataclass(frozen=True)
class ReturnsPanel:
    """Simple returns; column ``t`` is the change from date ``t`` to ``t + 1``.

    ``dates`` holds the date each return is realised on (the later of the two
    prices) and may be None for panels built by hand.
    """

    tickers: tuple[str, ...]
    returns: np.ndarray
    dates: tuple[dt.date, ...] | None = None

    def __post_init__(self):
        r = np.array(self.returns, dtype=np.float64)
        if r.ndim != 2 or r.shape[0] != len(self.tickers):
            raise ValidationError(f"returns matrix shape {r.shape} does not match {len(self.tickers)} tickers")
        if not np.all(np.isfinite(r)):
            raise ValidationError("returns must be finite")
        if self.dates is not None and len(self.dates) != r.shape[1]:
            raise ValidationError("returns dates do not match returns columns")
        object.__setattr__(self, "tickers", tuple(self.tickers))
        if self.dates is not None:
            object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "returns", _readonly(r))

    @property
    def shape(self) -> tuple[int, int]:
        return self.returns.shape


@dataclass(frozen=True)
class NewsArticle:
    article_id: str
    text: str
    mentions: tuple[int, ...] = ()
    date: dt.date | None = None

    def __post_init__(self):
        mentions = tuple(int(m) for m in self.mentions)
        if len(set(mentions)) != len(mentions):
            raise ValidationError(f"article {self.article_id}: duplicate mentions {mentions}")
        if any(m < 0 for m in mentions):
            raise ValidationError(f"article {self.article_id}: negative mention index")
        object.__setattr__(self, "mentions", mentions)


@dataclass(frozen=True)
class UniverseSelection:
    """Output of :func:`build_universe`; all three parts share one ticker order."""

    companies: tuple[LabeledCompany, ...]
    panel: PricePanel
    articles: tuple[NewsArticle, ...]
    mention_counts: dict = field(default_factory=dict, compare=False)

    @property
    def tickers(self) -> tuple[str, ...]:
        return self.panel.tickers


# ---------------------------------------------------------------------------
# prices


def _parse_date(text: str, path, line: int) -> dt.date:
    try:
        if len(text) != 10:
            raise ValueError
        return dt.date.fromisoformat(text)
    except ValueError:
        raise ParseError(f"bad date {text!r} (expected YYYY-MM-DD)", path, line) from None


def _parse_ticker(text: str, path, line: int) -> str:
    if not _TICKER_RE.match(text):
        raise ParseError(f"bad ticker {text!r}", path, line)
    return text


def _parse_price(text: str, path, line: int) -> float | None:
    """Parse one close cell. Empty cells are missing (None)."""
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"bad price {text!r}", path, line) from None
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{path}:{line}: price must be positive and finite, got {text}")
    return value


def _read_long(reader, path) -> dict[str, dict[dt.date, float]]:
    cells: dict[str, dict[dt.date, float]] = {}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", path, line)
        date = _parse_date(row[0].strip(), path, line)
        ticker = _parse_ticker(row[1].strip(), path, line)
        value = _parse_price(row[2].strip(), path, line)
        series = cells.setdefault(ticker, {})
        if date in series:
            raise ValidationError(f"{path}:{line}: duplicate row for ({date}, {ticker})")
        if value is not None:
            series[date] = value
        else:
            series.setdefault(date, None)  # marks the row as seen for duplicate checks
    return {t: {d: v for d, v in s.items() if v is not None} for t, s in cells.items()}


def _read_wide(header, reader, path) -> dict[str, dict[dt.date, float]]:
    tickers = [_parse_ticker(h.strip(), path, 1) for h in header[1:]]
    if len(set(tickers)) != len(tickers):
        raise ValidationError(f"{path}: duplicate ticker columns in header")
    cells: dict[str, dict[dt.date, float]] = {t: {} for t in tickers}
    seen: set[dt.date] = set()
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", path, line)
        date = _parse_date(row[0].strip(), path, line)
        if date in seen:
            raise ValidationError(f"{path}:{line}: duplicate date {date}")
        seen.add(date)
        for ticker, text in zip(tickers, row[1:]):
            value = _parse_price(text.strip(), path, line)
            if value is not None:
                cells[ticker][date] = value
    return cells


def load_prices(path, format: str = "auto") -> PricePanel:
    """Load closing prices from a long (``date,ticker,close``) or wide CSV.

    Tickers lacking a price on any date present in the file are dropped with
    a :class:`DataWarning`. The returned panel is sorted by ticker and date.
    """
    path = Path(path)
    if format not in ("auto", "long", "wide"):
        raise ConfigurationError(f"unknown price format {format!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty price file", path, 1) from None
        is_long = [h.lower() for h in header] == ["date", "ticker", "close"]
        if format == "auto":
            format = "long" if is_long else "wide"
        if format == "long":
            if not is_long:
                raise ParseError("long format needs header date,ticker,close", path, 1)
            cells = _read_long(reader, path)
        else:
            if len(header) < 2 or header[0].lower() != "date":
                raise ParseError("wide format needs header date,<TICKER>,...", path, 1)
            cells = _read_wide(header, reader, path)

    dates = sorted(set().union(*(s.keys() for s in cells.values()))) if cells else []
    complete, dropped = [], []
    for ticker in sorted(cells):
        (complete if len(cells[ticker]) == len(dates) else dropped).append(ticker)
    for ticker in dropped:
        missing = len(dates) - len(cells[ticker])
        warnings.warn(f"{ticker}: missing {missing} of {len(dates)} dates, excluded", DataWarning, stacklevel=2)
    if not complete:
        raise ValidationError(f"{path}: no ticker has complete pricing data")
    prices = np.array([[cells[t][d] for d in dates] for t in complete])
    return PricePanel(tuple(complete), tuple(dates), prices)


def write_prices(path, panel: PricePanel) -> None:
    """Write ``panel`` in long format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "ticker", "close"])
        for j, d in enumerate(panel.dates):
            for i, t in enumerate(panel.tickers):
                w.writerow([d.isoformat(), t, repr(float(panel.prices[i, j]))])


def compute_returns(panel: PricePanel) -> ReturnsPanel:
    p = panel.prices
    r = (p[:, 1:] - p[:, :-1]) / p[:, :-1]
    return ReturnsPanel(panel.tickers, r, panel.dates[1:])


# ---------------------------------------------------------------------------
# labels


def load_labels(path) -> list[LabeledCompany]:
    """Read a ``ticker,name,sector1,sector2`` CSV.

    Leading ``#`` lines are comments, except ``# sector1: A|B|C`` which
    declares the closed set of coarse sectors; every row is then checked
    against it.
    """
    path = Path(path)
    declared: set[str] | None = None
    out: list[LabeledCompany] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body_start = 0
    for i, raw in enumerate(lines):
        if not raw.startswith("#"):
            body_start = i
            break
        key, _, rest = raw[1:].partition(":")
        if key.strip().lower() == "sector1":
            declared = {s.strip() for s in rest.split("|") if s.strip()}
    else:
        raise ParseError("labels file has no header", path, len(lines) + 1)

    reader = csv.reader(lines[body_start:])
    header = [h.strip().lower() for h in next(reader)]
    if header != ["ticker", "name", "sector1", "sector2"]:
        raise ParseError("labels header must be ticker,name,sector1,sector2", path, body_start + 1)
    for row in reader:
        line = body_start + reader.line_num
        if not row:
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", path, line)
        ticker, name, s1, s2 = (c.strip() for c in row)
        ticker = _parse_ticker(ticker, path, line)
        if ticker in seen:
            raise ValidationError(f"{path}:{line}: duplicate ticker {ticker}")
        if declared is not None and s1 not in declared:
            raise ValidationError(f"{path}:{line}: sector1 {s1!r} not in declared set {sorted(declared)}")
        seen.add(ticker)
        out.append(LabeledCompany(ticker, name, s1, s2))
    return out


def write_labels(path, companies: Iterable[LabeledCompany]) -> None:
    companies = list(companies)
    sectors = sorted({c.sector1 for c in companies})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# sector1: " + "|".join(sectors) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ticker", "name", "sector1", "sector2"])
        for c in companies:
            w.writerow([c.ticker, c.name, c.sector1, c.sector2])


# ---------------------------------------------------------------------------
# news


@functools.lru_cache(maxsize=32)
def compile_ticker_pattern(pattern: str) -> re.Pattern:
    try:
        compiled = re.compile(pattern)
    except re.error as exc:
        raise ConfigurationError(f"invalid ticker pattern {pattern!r}: {exc}") from None
    if compiled.groups != 1:
        raise ConfigurationError(
            f"ticker pattern must have exactly one capture group, {pattern!r} has {compiled.groups}"
        )
    return compiled


def _ticker_index(universe) -> dict[str, int]:
    if isinstance(universe, dict):
        return universe
    return {(u.ticker if isinstance(u, LabeledCompany) else u): i for i, u in enumerate(universe)}


def extract_tickers(text: str, pattern: str = DEFAULT_TICKER_PATTERN, universe=()) -> list[int]:
    """Indices of universe companies whose ticker is captured in ``text``.

    ``universe`` is a sequence of tickers or :class:`LabeledCompany`. Output
    is in order of first occurrence, without duplicates; symbols outside the
    universe are ignored.
    """
    index = _ticker_index(universe)
    found: dict[int, None] = {}
    for m in compile_ticker_pattern(pattern).finditer(text):
        i = index.get(m.group(1))
        if i is not None:
            found.setdefault(i, None)
    return list(found)


def _iter_documents(path: Path):
    """Yield (article_id, date_text, raw_bytes_or_text, location)."""
    if path.is_dir():
        for f in sorted(path.glob("*.txt")):
            yield f.stem, None, f.read_bytes(), str(f)
        return
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError:
                yield None, None, raw, f"{path}:{lineno}"
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path, lineno) from None
            if not isinstance(rec, dict) or "id" not in rec or "text" not in rec:
                raise ParseError("record needs 'id' and 'text' fields", path, lineno)
            yield str(rec["id"]), rec.get("date"), rec["text"], f"{path}:{lineno}"


def load_news(path, pattern: str = DEFAULT_TICKER_PATTERN, universe=()) -> list[NewsArticle]:
    """Load articles from a directory of ``.txt`` files or a JSON-lines file.

    Articles that cannot be decoded as UTF-8 are skipped; the number skipped
    is reported in a single :class:`DataWarning`. Output is sorted by
    ``article_id``.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"news corpus not found: {path}")
    compile_ticker_pattern(pattern)
    index = _ticker_index(universe)
    articles, skipped = [], []
    for article_id, date_text, body, where in _iter_documents(path):
        if isinstance(body, bytes):
            try:
                body = body.decode("utf-8")
            except UnicodeDecodeError:
                skipped.append(where)
                continue
        if article_id is None:
            skipped.append(where)
            continue
        date = None
        if date_text:
            try:
                date = dt.date.fromisoformat(str(date_text))
            except ValueError:
                raise ParseError(f"bad date {date_text!r}", where) from None
        mentions = extract_tickers(body, pattern, index)
        articles.append(NewsArticle(article_id, body, tuple(mentions), date))
    if skipped:
        warnings.warn(f"skipped {len(skipped)} undecodable documents: {skipped[:5]}", DataWarning, stacklevel=2)
    ids = Counter(a.article_id for a in articles)
    dup = [k for k, v in ids.items() if v > 1]
    if dup:
        raise ValidationError(f"duplicate article ids: {sorted(dup)[:5]}")
    articles.sort(key=lambda a: a.article_id)
    return articles


def write_articles(path, articles: Iterable[NewsArticle], tickers: Sequence[str]) -> None:
    """Persist articles as JSON lines with mentions spelled as tickers."""
    with open(path, "w", encoding="utf-8") as fh:
        for a in articles:
            rec = {
                "id": a.article_id,
                "date": a.date.isoformat() if a.date else None,
                "mentions": [tickers[m] for m in a.mentions],
                "text": a.text,
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_articles(path, tickers: Sequence[str]) -> list[NewsArticle]:
    """Inverse of :func:`write_articles`; mentions are resolved against ``tickers``."""
    index = {t: i for i, t in enumerate(tickers)}
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            try:
                mentions = tuple(index[t] for t in rec["mentions"])
            except KeyError as exc:
                raise ValidationError(f"{path}:{lineno}: mention {exc.args[0]} not in universe") from None
            date = dt.date.fromisoformat(rec["date"]) if rec.get("date") else None
            out.append(NewsArticle(rec["id"], rec.get("text", ""), mentions, date))
    return out


# ---------------------------------------------------------------------------
# universe


def mention_counts(articles: Iterable[NewsArticle]) -> Counter:
    """Number of distinct articles mentioning each company index."""
    counts: Counter = Counter()
    for a in articles:
        counts.update(set(a.mentions))
    return counts


def build_universe(
    panel: PricePanel,
    articles: Sequence[NewsArticle],
    labels: Sequence[LabeledCompany],
    min_mentions: int = 50,
) -> UniverseSelection:
    """Keep companies with complete prices, a label and enough article mentions.

    ``articles`` must index mentions against ``panel.tickers``. Mentions are
    re-indexed to the filtered universe and articles left with no mention are
    dropped.
    """
    if min_mentions < 0:
        raise ConfigurationError(f"min_mentions must be >= 0, got {min_mentions}")
    n = len(panel.tickers)
    for a in articles:
        if any(m >= n for m in a.mentions):
            raise ValidationError(f"article {a.article_id}: mention index out of range for panel")

    by_ticker = {c.ticker: c for c in labels}
    unlabeled = [t for t in panel.tickers if t not in by_ticker]
    if unlabeled:
        warnings.warn(f"{len(unlabeled)} tickers have no label and are excluded: {unlabeled[:10]}",
                      DataWarning, stacklevel=2)

    counts = mention_counts(articles)
    keep = [i for i, t in enumerate(panel.tickers) if t in by_ticker and counts[i] >= min_mentions]
    if not keep:
        raise ConfigurationError(
            f"no company satisfies the inclusion criteria (min_mentions={min_mentions})"
        )
    remap = {old: new for new, old in enumerate(keep)}
    kept_articles = []
    for a in articles:
        mentions = tuple(remap[m] for m in a.mentions if m in remap)
        if mentions:
            kept_articles.append(NewsArticle(a.article_id, a.text, mentions, a.date))

    tickers = tuple(panel.tickers[i] for i in keep)
    logger.info("universe: kept %d of %d companies (min_mentions=%d)", len(keep), n, min_mentions)
    return UniverseSelection(
        companies=tuple(by_ticker[t] for t in tickers),
        panel=PricePanel(tickers, panel.dates, panel.prices[keep]),
        articles=tuple(kept_articles),
        mention_counts={panel.tickers[i]: counts[i] for i in keep},
    )
