"""The four classification strategies, their training orchestration, and
ranked top-k prediction.

Strategies
----------
svm-ee   one-vs-rest calibrated linear SVM over article vectors, fused with
         article/label-definition cosine similarity.
ffn      feed-forward softmax head over the article vector.
ffn-ee   feed-forward softmax head over the article vector concatenated
         with its label-definition similarities.
cnn-svm  CNN token encoder trained with softmax, then a one-vs-rest SVM
         refit on the frozen CNN representations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from . import neural, svm
from ._rng import mix_seed
from .corpus import Article, LabelCatalog
from .embedding import EmbeddingStore
from .errors import InputError


class StrategyKind(str, Enum):
    SVM_EE = "svm-ee"
    FFN = "ffn"
    FFN_EE = "ffn-ee"
    CNN_SVM = "cnn-svm"


def parse_strategy(name: str) -> StrategyKind:
    try:
        return StrategyKind(name)
    except ValueError:
        valid = ", ".join(k.value for k in StrategyKind)
        raise InputError(f"unknown strategy {name!r} (expected one of: {valid})") from None


@dataclass
class StrategyConfig:
    """Hyperparameters for every pipeline; defaults are the documented ones."""

    C: float = 1.0
    tol: float = 1e-4
    max_iter: int = 1000
    alpha: float = 0.7           # weight on the SVM probability in svm-ee fusion
    fusion: str = "similarities"  # or "concat-defs" for ffn-ee
    learning_rate: float = 0.05
    momentum: float = 0.9
    epochs: int = 30
    batch_size: int = 16
    hidden_units: int = 128
    feature_maps: int = 32
    dropout: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InputError(f"alpha must be in [0, 1], got {self.alpha}")

    def neural(self, seed: int) -> neural.NeuralConfig:
        return neural.NeuralConfig(learning_rate=self.learning_rate,
                                   momentum=self.momentum, epochs=self.epochs,
                                   batch_size=self.batch_size,
                                   hidden_units=self.hidden_units,
                                   dropout=self.dropout,
                                   feature_maps=self.feature_maps, seed=seed)


@dataclass(frozen=True)
class Prediction:
    """Full ranking over the catalog plus the emitted top-k label set."""

    article_id: str
    strategy: str
    k: int
    ranked: tuple[tuple[str, float], ...]
    emitted: tuple[str, ...]


@dataclass
class SvmEeModel:
    ovr: svm.OneVsRestSvm
    alpha: float
    training_log: dict = field(default_factory=dict)

    kind = StrategyKind.SVM_EE

    @property
    def labels(self) -> tuple[str, ...]:
        return self.ovr.labels

    @property
    def trained_labels(self) -> frozenset:
        return frozenset(self.ovr.machines)


@dataclass
class FfnModel:
    net: neural.MlpClassifier
    labels: tuple[str, ...]
    trained_labels: frozenset
    training_log: dict = field(default_factory=dict)

    kind = StrategyKind.FFN


@dataclass
class FfnEeModel:
    net: neural.MlpClassifier
    labels: tuple[str, ...]
    trained_labels: frozenset
    fusion: str = "similarities"
    training_log: dict = field(default_factory=dict)

    kind = StrategyKind.FFN_EE


@dataclass
class CnnSvmModel:
    cnn: neural.CnnClassifier
    ovr: svm.OneVsRestSvm
    training_log: dict = field(default_factory=dict)

    kind = StrategyKind.CNN_SVM

    @property
    def labels(self) -> tuple[str, ...]:
        return self.ovr.labels

    @property
    def trained_labels(self) -> frozenset:
        return frozenset(self.ovr.machines)


TrainedModel = SvmEeModel | FfnModel | FfnEeModel | CnnSvmModel


# ---------------------------------------------------------------------------
# Training


def _require_coverage(store: EmbeddingStore | None, what: str, ids) -> EmbeddingStore:
    if store is None:
        raise InputError(f"this strategy requires a {what} store")
    missing = store.missing(ids)
    if missing:
        raise InputError(f"{what} store is missing {len(missing)} id(s): "
                         f"{missing[:10]}")
    return store


def _article_matrix(articles: Sequence[Article], store: EmbeddingStore) -> np.ndarray:
    return np.stack([store.vector(a.id) for a in articles])


def _primary_targets(articles: Sequence[Article], catalog: LabelCatalog) -> list[int]:
    return [catalog.index(a.primary_label) for a in articles]


def train_strategy(kind: StrategyKind, train_articles: Sequence[Article],
                   catalog: LabelCatalog, config: StrategyConfig | None = None,
                   article_store: EmbeddingStore | None = None,
                   label_store: EmbeddingStore | None = None,
                   token_store: EmbeddingStore | None = None,
                   seed: int = 0) -> TrainedModel:
    """Train one strategy end to end on the given articles.

    Stores must cover every training article id (and every catalog label for
    the embedding-enriched strategies); violations raise
    :class:`InputError` listing the offending ids.
    """
    if not train_articles:
        raise InputError("training set is empty")
    config = config or StrategyConfig()
    ids = [a.id for a in train_articles]
    gold_sets = [set(a.gold_labels) for a in train_articles]
    seen_primary = frozenset(a.primary_label for a in train_articles)

    if kind == StrategyKind.SVM_EE:
        astore = _require_coverage(article_store, "article", ids)
        _require_coverage(label_store, "label", catalog.ids())
        X = _article_matrix(train_articles, astore)
        ovr = svm.fit_one_vs_rest(X, gold_sets, catalog, C=config.C, tol=config.tol,
                                  max_iter=config.max_iter, seed=seed)
        return SvmEeModel(ovr=ovr, alpha=config.alpha,
                          training_log=_svm_log(ovr))

    if kind == StrategyKind.FFN:
        astore = _require_coverage(article_store, "article", ids)
        X = _article_matrix(train_articles, astore)
        net, curve = neural.train_classifier(X, _primary_targets(train_articles, catalog),
                                             len(catalog), config.neural(seed))
        return FfnModel(net=net, labels=catalog.ids(), trained_labels=seen_primary,
                        training_log={"loss_curve": curve})

    if kind == StrategyKind.FFN_EE:
        astore = _require_coverage(article_store, "article", ids)
        lstore = _require_coverage(label_store, "label", catalog.ids())
        X = np.stack([neural.build_ee_fusion_input(astore.vector(a.id), lstore,
                                                   catalog, config.fusion)
                      for a in train_articles])
        net, curve = neural.train_classifier(X, _primary_targets(train_articles, catalog),
                                             len(catalog), config.neural(seed))
        return FfnEeModel(net=net, labels=catalog.ids(), trained_labels=seen_primary,
                          fusion=config.fusion, training_log={"loss_curve": curve})

    if kind == StrategyKind.CNN_SVM:
        tstore = _require_coverage(token_store, "token", ids)
        tokens = [tstore.tokens(a.id) for a in train_articles]
        cnn, curve = neural.train_classifier(tokens, _primary_targets(train_articles, catalog),
                                             len(catalog), config.neural(seed))
        # stage two: SVM over the frozen eval-mode CNN representations
        features = np.stack([neural.extract_cnn_representation(cnn, t) for t in tokens])
        ovr = svm.fit_one_vs_rest(features, gold_sets, catalog, C=config.C,
                                  tol=config.tol, max_iter=config.max_iter,
                                  seed=mix_seed(seed, 0x5BA9))
        log = _svm_log(ovr)
        log["loss_curve"] = curve
        return CnnSvmModel(cnn=cnn, ovr=ovr, training_log=log)

    raise InputError(f"unknown strategy kind {kind!r}")


def _svm_log(ovr: svm.OneVsRestSvm) -> dict:
    per_label = {}
    for label, machine in ovr.machines.items():
        per_label[label] = {
            "weight_norm": float(np.linalg.norm(machine.weights)),
            "bias": machine.bias,
            "platt": None if machine.platt is None else
                     {"A": machine.platt.A, "B": machine.platt.B,
                      "converged": machine.platt.converged},
        }
    return {"machines": per_label, "skipped_labels": list(ovr.skipped)}


# ---------------------------------------------------------------------------
# Scoring and prediction


def affine_similarity(cos: float) -> float:
    """Map a cosine in [-1, 1] onto [0, 1]."""
    return (1.0 + cos) / 2.0


def score_svm_ee(model: SvmEeModel, article_vec, label_store: EmbeddingStore
                 ) -> dict[str, float]:
    """Convex fusion of calibrated SVM probability and definition similarity:
    ``alpha * p(c) + (1 - alpha) * (1 + cos(article, def_c)) / 2``.

    Labels without a trained machine score exactly 0 (they rank last).
    """
    from .embedding import cosine_similarity

    missing = label_store.missing(model.labels)
    if missing:
        raise InputError(f"label store is missing definition vectors for: {missing}")
    probs = svm.predict_proba(model.ovr, article_vec)
    scores = {}
    for label in model.labels:
        if label not in model.trained_labels:
            scores[label] = 0.0
            continue
        sim = affine_similarity(cosine_similarity(article_vec, label_store.vector(label)))
        scores[label] = model.alpha * probs[label] + (1.0 - model.alpha) * sim
    return scores


def _score(model: TrainedModel, article: Article,
           article_store: EmbeddingStore | None,
           label_store: EmbeddingStore | None,
           token_store: EmbeddingStore | None) -> dict[str, float]:
    if isinstance(model, SvmEeModel):
        store = _require_coverage(article_store, "article", [article.id])
        lstore = _require_coverage(label_store, "label", model.labels)
        return score_svm_ee(model, store.vector(article.id), lstore)
    if isinstance(model, FfnModel):
        store = _require_coverage(article_store, "article", [article.id])
        logits, _ = neural.forward(model.net, store.vector(article.id), mode="eval")
        probs = neural.softmax(logits)
        return {label: (float(probs[i]) if label in model.trained_labels else 0.0)
                for i, label in enumerate(model.labels)}
    if isinstance(model, FfnEeModel):
        store = _require_coverage(article_store, "article", [article.id])
        lstore = _require_coverage(label_store, "label", model.labels)
        x = neural.build_ee_fusion_input(store.vector(article.id), lstore,
                                         model.labels, model.fusion)
        logits, _ = neural.forward(model.net, x, mode="eval")
        probs = neural.softmax(logits)
        return {label: (float(probs[i]) if label in model.trained_labels else 0.0)
                for i, label in enumerate(model.labels)}
    if isinstance(model, CnnSvmModel):
        store = _require_coverage(token_store, "token", [article.id])
        feats = neural.extract_cnn_representation(model.cnn, store.tokens(article.id))
        return svm.predict_proba(model.ovr, feats)
    raise InputError(f"unknown model type {type(model).__name__}")


def predict(model: TrainedModel, article: Article, k: int = 1,
            article_store: EmbeddingStore | None = None,
            label_store: EmbeddingStore | None = None,
            token_store: EmbeddingStore | None = None) -> Prediction:
    """Rank every catalog label by the strategy's native score and emit the
    top ``k``. Ties (and labels unseen in training, which score 0) break
    deterministically by catalog order.
    """
    labels = model.labels
    if not 1 <= k <= len(labels):
        raise InputError(f"k must be in [1, {len(labels)}], got {k}")
    scores = _score(model, article, article_store, label_store, token_store)
    position = {label: i for i, label in enumerate(labels)}
    order = sorted(labels, key=lambda lab: (-scores[lab], position[lab]))
    ranked = tuple((lab, float(scores[lab])) for lab in order)
    return Prediction(article_id=article.id, strategy=model.kind.value, k=k,
                      ranked=ranked, emitted=tuple(lab for lab, _ in ranked[:k]))


def predict_many(model: TrainedModel, articles: Sequence[Article], k: int = 1,
                 article_store: EmbeddingStore | None = None,
                 label_store: EmbeddingStore | None = None,
                 token_store: EmbeddingStore | None = None) -> list[Prediction]:
    return [predict(model, a, k, article_store, label_store, token_store)
            for a in articles]


# ---------------------------------------------------------------------------
# Prediction and model files


def save_predictions(predictions: Sequence[Prediction], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in predictions:
            rec = {"id": p.article_id, "strategy": p.strategy, "k": p.k,
                   "emitted": list(p.emitted),
                   "ranked": [{"label": lab, "score": score} for lab, score in p.ranked]}
            fh.write(json.dumps(rec))
            fh.write("\n")


def load_predictions(path) -> list[Prediction]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(Prediction(
                    article_id=rec["id"], strategy=rec["strategy"], k=int(rec["k"]),
                    ranked=tuple((r["label"], float(r["score"])) for r in rec["ranked"]),
                    emitted=tuple(rec["emitted"])))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise InputError(f"{path}:{lineno}: malformed prediction ({exc})") from exc
    return out


def model_to_dict(model: TrainedModel) -> dict:
    doc = {"strategy": model.kind.value, "log": model.training_log}
    if isinstance(model, SvmEeModel):
        doc["payload"] = {"alpha": model.alpha,
                          "svm": svm.one_vs_rest_to_dict(model.ovr)}
    elif isinstance(model, FfnModel):
        doc["payload"] = {"net": neural.model_to_dict(model.net),
                          "labels": list(model.labels),
                          "trained_labels": sorted(model.trained_labels)}
    elif isinstance(model, FfnEeModel):
        doc["payload"] = {"net": neural.model_to_dict(model.net),
                          "labels": list(model.labels),
                          "trained_labels": sorted(model.trained_labels),
                          "fusion": model.fusion}
    elif isinstance(model, CnnSvmModel):
        doc["payload"] = {"cnn": neural.model_to_dict(model.cnn),
                          "svm": svm.one_vs_rest_to_dict(model.ovr)}
    else:
        raise InputError(f"unknown model type {type(model).__name__}")
    return doc


def model_from_dict(doc: Mapping) -> TrainedModel:
    try:
        kind = parse_strategy(doc["strategy"])
        payload = doc["payload"]
        log = dict(doc.get("log", {}))
        if kind == StrategyKind.SVM_EE:
            return SvmEeModel(ovr=svm.one_vs_rest_from_dict(payload["svm"]),
                              alpha=float(payload["alpha"]), training_log=log)
        if kind == StrategyKind.FFN:
            return FfnModel(net=neural.model_from_dict(payload["net"]),
                            labels=tuple(payload["labels"]),
                            trained_labels=frozenset(payload["trained_labels"]),
                            training_log=log)
        if kind == StrategyKind.FFN_EE:
            return FfnEeModel(net=neural.model_from_dict(payload["net"]),
                              labels=tuple(payload["labels"]),
                              trained_labels=frozenset(payload["trained_labels"]),
                              fusion=payload.get("fusion", "similarities"),
                              training_log=log)
        return CnnSvmModel(cnn=neural.model_from_dict(payload["cnn"]),
                           ovr=svm.one_vs_rest_from_dict(payload["svm"]),
                           training_log=log)
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed model document: {exc}") from exc


def save_model(model: TrainedModel, path, config_echo: Mapping | None = None) -> None:
    doc = model_to_dict(model)
    if config_echo is not None:
        doc["config_echo"] = dict(config_echo)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_dict(doc)
