"""
Training company embeddings on a synthetic market
==================================================

A market with four planted sectors. Returns inside a sector share a common
factor; most articles only mention companies from one sector.
"""

import numpy as np

from sector_embed import (
    DEFAULT_TICKER_PATTERN, ContextGenConfig, NewsArticle, SyntheticSpec, TrainConfig,
    compute_returns, concat_embeddings, extract_tickers, generate, news_context_sets,
    returns_context_sets, similarity_matrix, train,
)


market = generate(SyntheticSpec(n_sectors=4, companies_per_sector=10, seed=0))
tickers = market.panel.tickers
print(len(tickers), "companies,", market.panel.prices.shape[1], "price observations each")

# %%
# Context sets for both modalities.
rsets = returns_context_sets(compute_returns(market.panel), ContextGenConfig())
articles = [NewsArticle(a["id"], a["text"], tuple(extract_tickers(a["text"], DEFAULT_TICKER_PATTERN, tickers)))
            for a in market.articles]
nsets = news_context_sets(articles)
print(len(rsets), "returns sets,", len(nsets), "news sets")

# %%
# One embedding matrix per modality, then the row-wise concatenation.
res_r = train(rsets, tickers, TrainConfig(seed=0))
res_n = train(nsets, tickers, TrainConfig(seed=1))
print("returns loss: first epoch %.3f, last %.3f" % (res_r.loss_trace[0], res_r.loss_trace[-1]))
print("news loss:    first epoch %.3f, last %.3f" % (res_n.loss_trace[0], res_n.loss_trace[-1]))
multimodal = concat_embeddings(res_r.embeddings, res_n.embeddings)

# %%
# Same-sector pairs should be far more similar than cross-sector pairs.
same = market.sector_of[:, None] == market.sector_of[None, :]
off = ~np.eye(len(tickers), dtype=bool)
for name, E in (("returns", res_r.embeddings), ("news", res_n.embeddings), ("multimodal", multimodal)):
    S = similarity_matrix(E).S
    print(f"{name:>10}: intra {S[same & off].mean():+.2f}  inter {S[~same].mean():+.2f}")
