import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synth import make_catalog, make_clustered_corpus  # noqa: E402

from esgclassify import embedding


@pytest.fixture(scope="session")
def small_catalog():
    return make_catalog(3)


@pytest.fixture(scope="session")
def clustered3():
    """3 labels x 10 single-label articles with toy embedding stores."""
    catalog = make_catalog(3)
    articles = make_clustered_corpus(catalog, 30, seed=101)
    article_store = embedding.embed_articles(articles, dim=48, seed=5)
    label_store = embedding.embed_label_definitions(catalog, dim=48, seed=5)
    token_store = embedding.embed_article_tokens(articles, dim=24, seed=5, max_len=32)
    return {"catalog": catalog, "articles": articles,
            "article_store": article_store, "label_store": label_store,
            "token_store": token_store}
