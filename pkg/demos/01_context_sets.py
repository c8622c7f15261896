"""
Building context sets from returns and news
============================================

Two ways of saying "these companies belong together": companies whose
daily returns landed close to each other, and companies named in the same
article.
"""

import numpy as np

from sector_embed import ContextGenConfig, NewsArticle, ReturnsPanel, news_context_sets, returns_context_sets
from sector_embed.contexts import daily_quartiles

# %%
# A toy market: six companies, three trading days.
tickers = ("AAPL", "C", "INTC", "JPM", "MSFT", "XOM")
r = np.array([
    [0.021, -0.004, 0.013],
    [-0.030, 0.011, -0.002],
    [0.019, -0.006, 0.015],
    [-0.028, 0.009, -0.001],
    [0.024, -0.003, 0.012],
    [0.002, 0.001, -0.020],
])
panel = ReturnsPanel(tickers, r)

# %%
# Each company becomes a target once per day; its context is the C
# companies with the closest return that day.
for s in returns_context_sets(panel, ContextGenConfig(context_size=2, iqr_filter=False))[:6]:
    print(s.origin, tickers[s.target], "->", [tickers[c] for c in s.context])

# %%
# The IQR filter keeps only targets outside the middle half of the day.
q1, q3 = daily_quartiles(r[:, 0])
print(f"day 0 quartiles: {q1:+.4f} {q3:+.4f}")
kept = returns_context_sets(panel, ContextGenConfig(context_size=2, iqr_filter=True))
print(len(kept), "of", r.size, "sets survive the filter")

# %%
# An article naming n companies yields n sets, one per target.
article = NewsArticle("a1", "JPMorgan (JPM.N) and Citigroup (C.N) rallied with Exxon (XOM.N).", (3, 1, 5))
for s in news_context_sets([article]):
    print(tickers[s.target], "->", [tickers[c] for c in s.context])
