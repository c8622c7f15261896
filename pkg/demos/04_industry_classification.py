"""
Classifying companies into sectors from their embeddings
=========================================================

Stratified 4-fold cross validation with SMOTE applied to each training
split only, then a single stratified hold-out split.
"""

import numpy as np

from sector_embed import (
    DEFAULT_TICKER_PATTERN, ContextGenConfig, Dataset, NewsArticle, SyntheticSpec, TrainConfig,
    compute_returns, concat_embeddings, cross_validate, extract_tickers, generate, holdout_eval,
    news_context_sets, returns_context_sets, train,
)


# %%
# Seven sectors with a weak planted signal. A third of the last sector is
# dropped so that SMOTE has minority rows to create.
market = generate(SyntheticSpec(n_sectors=7, companies_per_sector=12, n_days=200, n_articles=500,
                                intra_sector_return_correlation=0.05, co_mention_bias=0.2, seed=3))
keep = np.flatnonzero(~((market.sector_of == 6) & (np.arange(len(market.sector_of)) % 3 == 0)))
tickers = market.panel.tickers

rsets = returns_context_sets(compute_returns(market.panel), ContextGenConfig())
arts = [NewsArticle(a["id"], a["text"], tuple(extract_tickers(a["text"], DEFAULT_TICKER_PATTERN, tickers)))
        for a in market.articles]
E_r = train(rsets, tickers, TrainConfig(seed=0)).embeddings
E_n = train(news_context_sets(arts), tickers, TrainConfig(seed=1)).embeddings
E_m = concat_embeddings(E_r, E_n)
names = [market.companies[i].sector1 for i in keep]

# %%
# Pooled cross-validated predictions for each embedding.
for kind, E in (("returns", E_r), ("news", E_n), ("multimodal", E_m)):
    res = cross_validate(Dataset.from_labels(E.W[keep], names), k=4, seed=0)
    p, r, f = res.report.weighted_avg
    print(f"{kind:>10}: precision {p:.2f} recall {r:.2f} f1 {f:.2f} accuracy {res.report.accuracy:.0%}")

# %%
# Per-class breakdown on a 25% hold-out split of the multimodal embedding.
print(holdout_eval(Dataset.from_labels(E_m.W[keep], names), test_fraction=0.25).format_table())
