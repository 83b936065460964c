"""Corpus ingestion, label catalog, stratified splits, language composition.

File formats
------------
Corpus: UTF-8 JSONL, one object per line:
    {"id": str, "language": str, "title": str|null, "body": str, "labels": [str, ...]}
Label catalog: UTF-8 JSON:
    {"labels": [{"id": str, "name": str, "definition": str}, ...]}
Split: UTF-8 JSON:
    {"seed": int, "train_fraction": float, "train_ids": [...], "dev_ids": [...]}
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, Sequence

from ._rng import XorShift64Star
from .errors import InputError

_LANGUAGE_RE = re.compile(r"^[a-z]{2,8}$")

#: Language codes used by the bundled experiments; any lowercase ISO-639
#: code is accepted.
ENGLISH, FRENCH, CHINESE = "en", "fr", "zh"


def normalize_language(code: str) -> str:
    """Validate and canonicalise a language tag (lowercase ISO-639 text)."""
    tag = code.strip().lower()
    if not _LANGUAGE_RE.match(tag):
        raise InputError(f"invalid language tag {code!r}")
    return tag


@dataclass(frozen=True)
class Article:
    """One news document with its gold label set (order-preserving, no dups)."""

    id: str
    language: str
    body: str
    title: str | None = None
    gold_labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.id:
            raise InputError("article id must be non-empty")
        if not self.body.strip():
            raise InputError(f"article {self.id!r}: body is empty")
        if not self.gold_labels:
            raise InputError(f"article {self.id!r}: at least one gold label required")
        if len(set(self.gold_labels)) != len(self.gold_labels):
            raise InputError(f"article {self.id!r}: duplicate gold labels")
        object.__setattr__(self, "language", normalize_language(self.language))

    @property
    def primary_label(self) -> str:
        """First gold label; the stratification and softmax-training target."""
        return self.gold_labels[0]

    def embedding_text(self) -> str:
        """Text fed to encoders: title and body joined by a newline."""
        if self.title:
            return f"{self.title}\n{self.body}"
        return self.body


@dataclass(frozen=True)
class LabelEntry:
    id: str
    name: str
    definition: str


class LabelCatalog:
    """Ordered catalog of issue labels; definitions feed the embedding path."""

    def __init__(self, entries: Iterable[LabelEntry]):
        self.entries: tuple[LabelEntry, ...] = tuple(entries)
        seen = set()
        for e in self.entries:
            if not e.id:
                raise InputError("catalog entry with empty id")
            if e.id in seen:
                raise InputError(f"duplicate label id {e.id!r} in catalog")
            if not e.definition.strip():
                raise InputError(f"label {e.id!r}: definition must be non-empty")
            seen.add(e.id)
        self._index = {e.id: i for i, e in enumerate(self.entries)}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, label_id: str) -> bool:
        return label_id in self._index

    def __iter__(self):
        return iter(self.entries)

    def ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.entries)

    def index(self, label_id: str) -> int:
        try:
            return self._index[label_id]
        except KeyError:
            raise InputError(f"unknown label id {label_id!r}") from None

    def entry(self, label_id: str) -> LabelEntry:
        return self.entries[self.index(label_id)]


def load_catalog(path) -> LabelCatalog:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "labels" not in doc:
        raise InputError(f"{path}: expected an object with a 'labels' array")
    entries = []
    for rec in doc["labels"]:
        try:
            entries.append(LabelEntry(id=rec["id"], name=rec["name"],
                                      definition=rec["definition"]))
        except (KeyError, TypeError) as exc:
            raise InputError(f"{path}: malformed catalog entry {rec!r}") from exc
    return LabelCatalog(entries)


def save_catalog(catalog: LabelCatalog, path) -> None:
    doc = {"labels": [{"id": e.id, "name": e.name, "definition": e.definition}
                      for e in catalog]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def default_catalog() -> LabelCatalog:
    """The bundled 35-issue catalog (MSCI key-issue taxonomy)."""
    text = resources.files("esgclassify").joinpath("data/esg_key_issues.json").read_text("utf-8")
    doc = json.loads(text)
    return LabelCatalog(LabelEntry(**rec) for rec in doc["labels"])


# ---------------------------------------------------------------------------
# Corpus I/O


def load_corpus(path, catalog: LabelCatalog) -> list[Article]:
    """Read a JSONL corpus, validating every record against the catalog.

    Order is preserved. Raises :class:`InputError` on a malformed line
    (with its line number), an unknown label id, or a duplicate article id.
    """
    articles: list[Article] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(rec, dict):
                raise InputError(f"{path}:{lineno}: expected a JSON object")
            try:
                article = Article(
                    id=rec["id"],
                    language=rec["language"],
                    title=rec.get("title"),
                    body=rec["body"],
                    gold_labels=tuple(rec["labels"]),
                )
            except KeyError as exc:
                raise InputError(f"{path}:{lineno}: missing field {exc}") from exc
            except InputError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
            if article.id in seen_ids:
                raise InputError(f"{path}:{lineno}: duplicate article id {article.id!r}")
            for label in article.gold_labels:
                if label not in catalog:
                    raise InputError(
                        f"{path}:{lineno}: article {article.id!r} has unknown label {label!r}"
                    )
            seen_ids.add(article.id)
            articles.append(article)
    return articles


def write_corpus(articles: Sequence[Article], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in articles:
            rec = {"id": a.id, "language": a.language, "title": a.title,
                   "body": a.body, "labels": list(a.gold_labels)}
            fh.write(json.dumps(rec, ensure_ascii=False))
            fh.write("\n")


# ---------------------------------------------------------------------------
# Splits


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint train/dev partition of a corpus, tagged with its recipe."""

    train_ids: tuple[str, ...]
    dev_ids: tuple[str, ...]
    seed: int
    train_fraction: float

    def __post_init__(self):
        overlap = set(self.train_ids) & set(self.dev_ids)
        if overlap:
            raise InputError(f"split has overlapping ids: {sorted(overlap)[:5]}")


def stratified_split(corpus: Sequence[Article], train_fraction: float,
                     seed: int) -> SplitSpec:
    """Deterministic stratified partition on each article's primary label.

    Per label, round(fraction * support) articles go to train (never fewer
    than one, so a label present in the corpus is always learnable); the
    rest go to dev. Labels with a single article therefore land in train.
    The per-label shuffle is driven by the fixed xorshift stream, so the
    result depends only on (corpus order, fraction, seed).
    """
    if not corpus:
        raise InputError("cannot split an empty corpus")
    if not 0.0 < train_fraction < 1.0:
        raise InputError(f"train_fraction must be in (0, 1), got {train_fraction}")

    buckets: dict[str, list[str]] = {}
    for article in corpus:
        buckets.setdefault(article.primary_label, []).append(article.id)

    rng = XorShift64Star(seed)
    train: set[str] = set()
    for label in buckets:  # insertion order = first appearance in corpus
        ids = list(buckets[label])
        rng.shuffle(ids)
        n_train = int(train_fraction * len(ids) + 0.5)
        n_train = max(1, min(n_train, len(ids)))
        train.update(ids[:n_train])

    train_ids = tuple(a.id for a in corpus if a.id in train)
    dev_ids = tuple(a.id for a in corpus if a.id not in train)
    return SplitSpec(train_ids=train_ids, dev_ids=dev_ids, seed=seed,
                     train_fraction=train_fraction)


def save_split(split: SplitSpec, path) -> None:
    doc = {"seed": split.seed, "train_fraction": split.train_fraction,
           "train_ids": list(split.train_ids), "dev_ids": list(split.dev_ids)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_split(path) -> SplitSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from exc
    try:
        return SplitSpec(train_ids=tuple(doc["train_ids"]),
                         dev_ids=tuple(doc["dev_ids"]),
                         seed=doc["seed"], train_fraction=doc["train_fraction"])
    except KeyError as exc:
        raise InputError(f"{path}: missing field {exc}") from exc


def split_articles(corpus: Sequence[Article], split: SplitSpec
                   ) -> tuple[list[Article], list[Article]]:
    """Resolve a split back to article lists (corpus order)."""
    by_id = {a.id: a for a in corpus}
    missing = [i for i in (*split.train_ids, *split.dev_ids) if i not in by_id]
    if missing:
        raise InputError(f"split references unknown article ids: {missing[:5]}")
    return ([by_id[i] for i in split.train_ids], [by_id[i] for i in split.dev_ids])


# ---------------------------------------------------------------------------
# Mono/multilingual composition


def compose_training_set(corpora: Mapping[str, Sequence[Article]],
                         languages: Sequence[str]) -> list[Article]:
    """Concatenate the given languages' articles, in tag order.

    A single tag is the monolingual mode; several tags give the multilingual
    mode (e.g. combined English plus French training data). Order within
    each language's corpus is preserved; nothing is duplicated or dropped.
    """
    if not languages:
        raise InputError("composition requires at least one language tag")
    composed: list[Article] = []
    for tag in languages:
        if tag not in corpora:
            raise InputError(f"no corpus for language tag {tag!r}")
        composed.extend(corpora[tag])
    return composed
