"""Company embeddings learned from co-moving returns and news co-mentions."""

__version__ = "0.1.0"

from .analytics import (
    EdgeList,
    SimilarityMatrix,
    cosine,
    density_threshold,
    export_graph,
    format_knn_table,
    knn,
    mismatches,
    similarity_matrix,
)
from .classifier import (
    ClassificationReport,
    Dataset,
    LinearModel,
    SVMParams,
    cross_validate,
    holdout_eval,
    kfold_cv,
    predict,
    predict_proba,
    report_metrics,
    smote,
    train_linear_svm,
)
from .contexts import (
    ContextGenConfig,
    ContextSet,
    daily_quartiles,
    news_context_sets,
    returns_context_sets,
)
from .corpus import (
    DEFAULT_TICKER_PATTERN,
    LabeledCompany,
    NewsArticle,
    PricePanel,
    ReturnsPanel,
    build_universe,
    compute_returns,
    extract_tickers,
    load_labels,
    load_news,
    load_prices,
)
from .embedder import (
    EmbeddingMatrix,
    TrainConfig,
    concat_embeddings,
    forward,
    hidden_layer,
    init_embeddings,
    loss_and_gradient,
    train,
)
from .synth import SyntheticMarket, SyntheticSpec, generate
