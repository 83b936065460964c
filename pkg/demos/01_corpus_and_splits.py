"""Corpus handling: JSONL round trips, stratified splits, and mono- vs
multilingual training composition.

Run with: python demos/01_corpus_and_splits.py
"""

import tempfile
from collections import Counter
from pathlib import Path

from esgclassify import (Article, compose_training_set, default_catalog,
                         load_corpus, stratified_split, write_corpus)

catalog = default_catalog()
print(f"bundled catalog: {len(catalog)} issues, e.g.")
for entry in list(catalog)[:3]:
    print(f"  {entry.id:<28} {entry.name}")

# A small bilingual corpus: article bodies just mention their issue here;
# real corpora come from a JSONL file with the same five fields.
issues = catalog.ids()
articles = []
for i in range(40):
    label = issues[i % 4]
    lang = "en" if i % 2 == 0 else "fr"
    articles.append(Article(
        id=f"{lang}-{i:03d}", language=lang,
        title=f"note on {label}",
        body=f"coverage of {label} developments this week, item {i}",
        gold_labels=(label,)))

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "corpus.jsonl"
    write_corpus(articles, path)
    reloaded = load_corpus(path, catalog)
    print(f"\nround trip: wrote and reloaded {len(reloaded)} articles, "
          f"equal={reloaded == articles}")

# Stratified 70/30 split on the primary (first) gold label. Same seed,
# same corpus order => byte-identical split, on any machine.
split = stratified_split(articles, train_fraction=0.7, seed=7)
print(f"\nsplit: {len(split.train_ids)} train / {len(split.dev_ids)} dev")
train_labels = Counter(a.primary_label for a in articles if a.id in set(split.train_ids))
for label, count in sorted(train_labels.items()):
    total = sum(1 for a in articles if a.primary_label == label)
    print(f"  {label:<28} {count}/{total} in train")

# Training composition: monolingual uses one language, multilingual
# concatenates several in tag order.
corpora = {"en": [a for a in articles if a.language == "en"],
           "fr": [a for a in articles if a.language == "fr"]}
mono = compose_training_set(corpora, ["fr"])
multi = compose_training_set(corpora, ["en", "fr"])
print(f"\nmonolingual fr: {len(mono)} articles")
print(f"multilingual en+fr: {len(multi)} articles "
      f"(first={multi[0].id}, last={multi[-1].id})")
