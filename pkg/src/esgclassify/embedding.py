"""Embedding boundary: file-backed vector stores, cosine geometry, and a
deterministic feature-hashing embedder for fixtures.

Store file format (UTF-8, JSON lines): the first line is a header
``{"dim": int, "kind": "article"|"label"|"token", "count": int}``; each
following line is ``{"id": str, "vector": [f, ...]}`` for article/label
stores or ``{"id": str, "tokens": [[f, ...], ...]}`` for token stores.
Floats are written as shortest round-trip decimals, so save/load is
bit-exact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InputError

STORE_KINDS = ("article", "label", "token")

#: Token matrices longer than this are truncated by the toy embedder.
DEFAULT_MAX_SEQUENCE_LENGTH = 256


def as_vector(values, dim: int | None = None) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise InputError(f"expected a 1-d vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise InputError(f"vector has dim {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise InputError("vector contains non-finite components")
    return v


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two equal-dimension, nonzero vectors."""
    va, vb = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise InputError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise InputError("cosine similarity undefined for zero-norm vectors")
    return float(va @ vb) / (na * nb)


def cosine_distance(a, b) -> float:
    return 1.0 - cosine_similarity(a, b)


class TokenMatrix:
    """Per-token embedding rows for one document.

    ``rows`` may carry trailing zero padding (e.g. fixed-width batches);
    ``length`` marks the real token count and everything beyond it is
    ignored by consumers and dropped on serialization.
    """

    def __init__(self, rows, length: int | None = None):
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise InputError(f"token matrix must be 2-d and non-empty, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise InputError("token matrix contains non-finite components")
        if length is None:
            length = rows.shape[0]
        if not 1 <= length <= rows.shape[0]:
            raise InputError(f"token length {length} outside [1, {rows.shape[0]}]")
        if length < rows.shape[0] and np.any(rows[length:]):
            raise InputError("padding rows beyond the token length must be zero")
        self.rows = rows
        self.length = int(length)

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def trimmed(self) -> np.ndarray:
        """The real token rows, padding stripped."""
        return self.rows[: self.length]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TokenMatrix):
            return NotImplemented
        return self.length == other.length and np.array_equal(self.trimmed(), other.trimmed())

    def __repr__(self) -> str:
        return f"TokenMatrix(length={self.length}, dim={self.dim})"


@dataclass(frozen=True)
class EmbeddingStore:
    """Immutable id -> vector (or token matrix) mapping of one fixed dim."""

    dim: int
    kind: str
    entries: dict

    def __post_init__(self):
        if self.kind not in STORE_KINDS:
            raise InputError(f"unknown store kind {self.kind!r}")
        if self.dim < 1:
            raise InputError(f"store dim must be positive, got {self.dim}")
        for key, value in self.entries.items():
            if self.kind == "token":
                if not isinstance(value, TokenMatrix):
                    raise InputError(f"entry {key!r}: token store requires TokenMatrix values")
                if value.dim != self.dim:
                    raise InputError(f"entry {key!r}: dim {value.dim} != store dim {self.dim}")
            else:
                self.entries[key] = as_vector(value, self.dim)

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def ids(self) -> tuple[str, ...]:
        return tuple(self.entries)

    def vector(self, key: str) -> np.ndarray:
        if self.kind == "token":
            raise InputError("vector() is not available on a token store")
        try:
            return self.entries[key]
        except KeyError:
            raise InputError(f"id {key!r} not in {self.kind} store") from None

    def tokens(self, key: str) -> TokenMatrix:
        if self.kind != "token":
            raise InputError("tokens() requires a token store")
        try:
            return self.entries[key]
        except KeyError:
            raise InputError(f"id {key!r} not in token store") from None

    def missing(self, keys: Iterable[str]) -> list[str]:
        return [k for k in keys if k not in self.entries]


def save_store(store: EmbeddingStore, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {"dim": store.dim, "kind": store.kind, "count": len(store)}
        fh.write(json.dumps(header))
        fh.write("\n")
        for key, value in store.entries.items():
            if store.kind == "token":
                rec = {"id": key, "tokens": [[float(x) for x in row] for row in value.trimmed()]}
            else:
                rec = {"id": key, "vector": [float(x) for x in value]}
            fh.write(json.dumps(rec))
            fh.write("\n")


def load_store(path) -> EmbeddingStore:
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
            dim, kind, count = header["dim"], header["kind"], header["count"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(f"{path}: bad store header ({exc})") from exc
        if kind not in STORE_KINDS:
            raise InputError(f"{path}: unknown store kind {kind!r}")
        entries: dict = {}
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                key = rec["id"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise InputError(f"{path}:{lineno}: malformed record ({exc})") from exc
            if key in entries:
                raise InputError(f"{path}:{lineno}: duplicate id {key!r}")
            try:
                if kind == "token":
                    matrix = np.asarray(rec["tokens"], dtype=np.float64)
                    if matrix.ndim != 2 or matrix.shape[1] != dim:
                        raise InputError(
                            f"{path}:{lineno}: id {key!r} token rows do not match dim {dim}")
                    entries[key] = TokenMatrix(matrix)
                else:
                    vec = np.asarray(rec["vector"], dtype=np.float64)
                    if vec.ndim != 1 or vec.shape[0] != dim:
                        raise InputError(
                            f"{path}:{lineno}: id {key!r} has {vec.shape} components, "
                            f"header says dim {dim}")
                    if not np.all(np.isfinite(vec)):
                        raise InputError(f"{path}:{lineno}: id {key!r} has non-finite values")
                    entries[key] = vec
            except (ValueError, TypeError) as exc:
                if isinstance(exc, InputError):
                    raise
                raise InputError(f"{path}:{lineno}: id {key!r}: {exc}") from exc
    if len(entries) != count:
        raise InputError(f"{path}: header count {count} != {len(entries)} records")
    return EmbeddingStore(dim=dim, kind=kind, entries=entries)


# ---------------------------------------------------------------------------
# Toy embedder: signed feature hashing. Deterministic given (text, dim, seed);
# needs no stored weights, which keeps fixtures and demos self-contained.


def _token_vector(token: str, dim: int, seed: int) -> np.ndarray:
    key = (seed & (2**64 - 1)).to_bytes(8, "little")
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=16, key=key).digest()
    v = np.zeros(dim)
    for i in range(4):  # four signed probes per token
        u = int.from_bytes(digest[4 * i: 4 * i + 4], "little")
        sign = 1.0 if u & 1 else -1.0
        v[(u >> 1) % dim] += sign
    if not v.any():  # all probes cancelled; fall back to one unsigned probe
        v[int.from_bytes(digest[:4], "little") % dim] = 1.0
    return v


def _tokenize(text: str) -> list[str]:
    return text.lower().split()


def toy_embed(text: str, dim: int, seed: int) -> np.ndarray:
    """L2-normalised sum of hashed token vectors."""
    if dim < 2:
        raise InputError(f"toy embedder needs dim >= 2, got {dim}")
    tokens = _tokenize(text)
    if not tokens:
        raise InputError("cannot embed text with no tokens")
    total = np.zeros(dim)
    for tok in tokens:
        total += _token_vector(tok, dim, seed)
    norm = float(np.linalg.norm(total))
    if norm == 0.0:
        raise InputError("token vectors cancelled to the zero vector")
    return total / norm


def toy_embed_tokens(text: str, dim: int, seed: int,
                     max_len: int = DEFAULT_MAX_SEQUENCE_LENGTH) -> TokenMatrix:
    """Per-token normalised hash vectors, truncated/zero-padded to ``max_len``."""
    if dim < 2:
        raise InputError(f"toy embedder needs dim >= 2, got {dim}")
    if max_len < 1:
        raise InputError(f"max_len must be positive, got {max_len}")
    tokens = _tokenize(text)
    if not tokens:
        raise InputError("cannot embed text with no tokens")
    tokens = tokens[:max_len]
    rows = np.zeros((max_len, dim))
    for i, tok in enumerate(tokens):
        v = _token_vector(tok, dim, seed)
        rows[i] = v / np.linalg.norm(v)
    return TokenMatrix(rows, length=len(tokens))


def embed_articles(articles, dim: int, seed: int) -> EmbeddingStore:
    """Article store over ``Article.embedding_text()`` via the toy embedder."""
    entries = {a.id: toy_embed(a.embedding_text(), dim, seed) for a in articles}
    return EmbeddingStore(dim=dim, kind="article", entries=entries)


def embed_label_definitions(catalog, dim: int, seed: int) -> EmbeddingStore:
    entries = {e.id: toy_embed(e.definition, dim, seed) for e in catalog}
    return EmbeddingStore(dim=dim, kind="label", entries=entries)


def embed_article_tokens(articles, dim: int, seed: int,
                         max_len: int = DEFAULT_MAX_SEQUENCE_LENGTH) -> EmbeddingStore:
    entries = {a.id: toy_embed_tokens(a.embedding_text(), dim, seed, max_len)
               for a in articles}
    return EmbeddingStore(dim=dim, kind="token", entries=entries)
