"""The embedding boundary: file-backed stores, cosine geometry, and the
deterministic toy embedder used throughout the fixtures.

Run with: python demos/02_embeddings_and_similarity.py
"""

import tempfile
from pathlib import Path

from esgclassify import (EmbeddingStore, cosine_similarity, load_store,
                         save_store, toy_embed, toy_embed_tokens)

# The toy embedder is signed feature hashing: tokens hash into +-1 buckets,
# the article vector is the normalized sum. No weights, fully deterministic.
dim, seed = 64, 7
solar = toy_embed("solar farm output doubles as panel costs fall", dim, seed)
wind = toy_embed("new offshore wind farm output hits record", dim, seed)
audit = toy_embed("auditor flags accounting irregularities in filings", dim, seed)

print("cosine similarities (dim=64):")
print(f"  solar vs wind  : {cosine_similarity(solar, wind):+.3f}   (shared tokens)")
print(f"  solar vs audit : {cosine_similarity(solar, audit):+.3f}   (disjoint topics)")
print(f"  solar norm     : {float((solar @ solar) ** 0.5):.12f}")

# Token-level view for the CNN pathway: one normalized row per token,
# zero-padded to max_len with the true length flagged.
tokens = toy_embed_tokens("solar farm output doubles", dim=8, seed=7, max_len=6)
print(f"\ntoken matrix: shape={tokens.rows.shape}, real length={tokens.length}")

# Stores serialize as JSON lines with shortest round-trip decimals, so a
# save/load cycle is bit-exact.
store = EmbeddingStore(dim=dim, kind="article",
                       entries={"solar": solar, "wind": wind, "audit": audit})
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "articles.store"
    save_store(store, path)
    loaded = load_store(path)
    same = all((loaded.vector(k) == store.vector(k)).all() for k in store.ids())
    print(f"\nstore round trip: {len(loaded)} entries, bit-exact={same}")
    print("file header:", path.read_text().splitlines()[0])
