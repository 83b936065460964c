"""Multi-strategy ESG issue classification over precomputed text embeddings.

The library classifies news articles into a 35-issue catalog with four
interchangeable strategies (calibrated one-vs-rest linear SVM fused with
definition similarity, a feed-forward head, a similarity-enriched
feed-forward head, and a CNN encoder stacked with an SVM), plus the
experiment harness around them: stratified splits, mono/multilingual
training composition, top-k emission, and micro/macro/weighted F1 reports.
"""

from .corpus import (Article, LabelCatalog, LabelEntry, SplitSpec,
                     compose_training_set, default_catalog, load_catalog,
                     load_corpus, load_split, save_split, split_articles,
                     stratified_split, write_corpus)
from .embedding import (EmbeddingStore, TokenMatrix, cosine_distance,
                        cosine_similarity, embed_article_tokens, embed_articles,
                        embed_label_definitions, load_store, save_store,
                        toy_embed, toy_embed_tokens)
from .errors import InputError, TrainingDivergedError
from .metrics import (MetricsReport, compare_runs, compute_report,
                      count_label_outcomes, evaluate_predictions, gold_map)
from .strategies import (Prediction, StrategyConfig, StrategyKind, load_model,
                         load_predictions, predict, predict_many, save_model,
                         save_predictions, score_svm_ee, train_strategy)
from .svm import (BinarySvm, OneVsRestSvm, PlattScaling, fit_binary,
                  fit_one_vs_rest, fit_platt, predict_proba,
                  predict_proba_normalized, primal_objective)

__version__ = "0.1.0"
