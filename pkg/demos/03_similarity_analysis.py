"""
Nearest neighbours, graph export and label mismatches
======================================================
"""

from sector_embed import (
    DEFAULT_TICKER_PATTERN, ContextGenConfig, SyntheticSpec, TrainConfig, compute_returns,
    density_threshold, export_graph, format_knn_table, generate, knn, mismatches,
    returns_context_sets, similarity_matrix, train,
)

market = generate(SyntheticSpec(n_sectors=3, companies_per_sector=8, n_days=200, seed=5,
                                intra_sector_return_correlation=0.3))
sets = returns_context_sets(compute_returns(market.panel), ContextGenConfig())
E = train(sets, market.panel.tickers, TrainConfig(epochs=15)).embeddings

# %%
# The three closest companies to the first ticker, by cosine similarity.
query = E.tickers[0]
print(format_knn_table(query, knn(E, query, 3), market.companies))

# %%
# Edges are kept when similarity is strictly above the threshold.
S = similarity_matrix(E)
for t in (0.97, 0.9, 0.0):
    g = export_graph(S, t)
    print(f"threshold {t}: {len(g.edges)} edges, density {g.density:.2f}")

# %%
# Or pick the threshold that gives a target density.
t = density_threshold(S, 0.15)
print(f"density 0.15 -> threshold {t:.3f}, actual {export_graph(S, t).density:.3f}")

# %%
# Pairs the embedding finds similar although their sector labels differ.
rows = mismatches(S, market.companies, min_sim=-0.2)
print(len(rows), "cross-sector pairs at or above -0.2")
for a, b, s, la, lb in rows[:5]:
    print(f"  {a} ({la}) ~ {b} ({lb}): {s:.2f}")
