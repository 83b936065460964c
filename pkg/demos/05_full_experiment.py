"""End to end: build a synthetic bilingual corpus, train all four
strategies, compare them, sweep the emission depth k, and drive the same
pipeline through the command-line harness.

Run with: python demos/05_full_experiment.py
"""

import json
import random
import tempfile
from pathlib import Path

from esgclassify import (cli, compose_training_set, embed_article_tokens,
                         embed_articles, embed_label_definitions,
                         evaluate_predictions, gold_map, predict_many,
                         split_articles, stratified_split, train_strategy,
                         write_corpus)
from esgclassify.corpus import Article, LabelCatalog, LabelEntry, save_catalog
from esgclassify.metrics import compare_runs, render_comparison_text
from esgclassify.strategies import StrategyConfig, StrategyKind

TOPICS = {
    "renewables": "turbine solar panel grid megawatt",
    "safety": "injury incident inspection helmet accident",
    "pay": "bonus salary compensation vote payout",
    "water": "drought reservoir irrigation aquifer usage",
}


def make_corpus(language, n, seed, extra_label_rate=0.0):
    rng = random.Random(seed)
    labels = list(TOPICS)
    articles = []
    for i in range(n):
        label = labels[i % len(labels)]
        gold = [label]
        if rng.random() < extra_label_rate:
            gold.append(rng.choice([l for l in labels if l != label]))
        words = []
        for lab in gold:
            words += rng.choices(TOPICS[lab].split(), k=5)
        words += rng.choices("market company report quarter group".split(), k=4)
        rng.shuffle(words)
        articles.append(Article(id=f"{language}-{i:03d}", language=language,
                                title=f"{label} update", body=" ".join(words),
                                gold_labels=tuple(gold)))
    return articles


catalog = LabelCatalog([LabelEntry(name, name.title(), f"{words} coverage")
                        for name, words in TOPICS.items()])
en = make_corpus("en", 160, seed=1, extra_label_rate=0.3)
fr = make_corpus("fr", 80, seed=2, extra_label_rate=0.3)

article_store = embed_articles(en + fr, dim=48, seed=9)
label_store = embed_label_definitions(catalog, dim=48, seed=9)
token_store = embed_article_tokens(en + fr, dim=24, seed=9, max_len=24)

en_split = stratified_split(en, 0.7, seed=5)
train_en, dev_en = split_articles(en, en_split)
fr_split = stratified_split(fr, 0.7, seed=5)
train_fr, _ = split_articles(fr, fr_split)
train_multi = compose_training_set({"en": train_en, "fr": train_fr}, ["en", "fr"])

stores = dict(article_store=article_store, label_store=label_store,
              token_store=token_store)
cfg = StrategyConfig(C=10.0, epochs=15, learning_rate=0.1,
                     hidden_units=32, feature_maps=8)
gold = gold_map(dev_en)

# --- all four strategies on the multilingual training set
print("training all four strategies (multilingual en+fr) ...")
reports = {}
for kind in StrategyKind:
    model = train_strategy(kind, train_multi, catalog, cfg, seed=3, **stores)
    preds = predict_many(model, dev_en, k=1, **stores)
    reports[kind.value] = evaluate_predictions(preds, gold, catalog)
print(render_comparison_text(compare_runs(reports)))

# --- top-k sweep: deeper emission trades precision for recall
model = train_strategy(StrategyKind.SVM_EE, train_multi, catalog, cfg,
                       seed=3, **stores)
print("emission depth sweep (svm-ee):")
for k in (1, 2, 3):
    preds = predict_many(model, dev_en, k=k, **stores)
    r = evaluate_predictions(preds, gold, catalog)
    print(f"  k={k}: micro P={r.micro_precision:.3f} R={r.micro_recall:.3f} "
          f"F1={r.micro_f1:.3f}")

# --- the same pipeline through the CLI, config-driven and reproducible
with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    save_catalog(catalog, tmp / "catalog.json")
    write_corpus(en, tmp / "en.jsonl")
    write_corpus(fr, tmp / "fr.jsonl")
    from esgclassify import save_store
    save_store(article_store, tmp / "articles.store")
    save_store(label_store, tmp / "labels.store")
    save_store(token_store, tmp / "tokens.store")
    (tmp / "config.json").write_text(json.dumps({
        "name": "demo",
        "catalog": "catalog.json",
        "corpora": {"en": "en.jsonl", "fr": "fr.jsonl"},
        "stores": {"article": "articles.store", "label": "labels.store",
                   "token": "tokens.store"},
        "strategy": "svm-ee",
        "composition": {"mode": "multilingual", "languages": ["en", "fr"]},
        "eval_language": "en",
        "k": 2,
        "train_fraction": 0.7,
        "seeds": {"split": 5, "train": 3},
        "hyperparameters": {"C": 10.0},
    }))
    code = cli.main(["experiment", "--config", str(tmp / "config.json")])
    manifest = json.loads((tmp / "runs" / "demo" / "manifest.json").read_text())
    print(f"\ncli experiment exit={code}; artifacts:")
    for name, digest in manifest["files"].items():
        print(f"  {name:<20} {digest[:23]}...")
