"""The neural building blocks: feed-forward head with inverted dropout,
similarity fusion input, and the CNN token encoder with max-pooling.

Run with: python demos/04_neural_heads.py
"""

import numpy as np

from esgclassify import EmbeddingStore, toy_embed, toy_embed_tokens
from esgclassify.corpus import LabelCatalog, LabelEntry
from esgclassify.neural import (NeuralConfig, build_ee_fusion_input,
                                conv_forward, extract_cnn_representation,
                                forward, softmax, train_classifier)

rng = np.random.default_rng(11)

# --- feed-forward head on two gaussian clusters
X = np.vstack([rng.normal(+1.5, 0.5, size=(40, 16)),
               rng.normal(-1.5, 0.5, size=(40, 16))])
targets = np.array([0] * 40 + [1] * 40)
cfg = NeuralConfig(hidden_units=32, epochs=20, seed=4)
model, curve = train_classifier(X, targets, n_classes=2, cfg=cfg)
logits, _ = forward(model, X, mode="eval")
acc = float(np.mean(np.argmax(logits, axis=1) == targets))
print(f"feed-forward head: train accuracy={acc:.2f}")
print(f"  loss curve: {curve[0]:.3f} -> {curve[4]:.3f} -> {curve[-1]:.4f}")

# dropout is inverted: train-mode activations are rescaled by 1/(1-rate),
# so eval mode needs no correction
x = X[0]
eval_logits, _ = forward(model, x, mode="eval")
stream = np.random.default_rng(0)
avg = np.mean([forward(model, x, mode="train", rng=stream)[0]
               for _ in range(2000)], axis=0)
print(f"  eval logits {eval_logits.round(3)} vs mean train logits {avg.round(3)}")

# --- similarity fusion input: [article vector || cosine to each definition]
catalog = LabelCatalog([
    LabelEntry("water", "Water", "water stress drought reservoirs irrigation"),
    LabelEntry("board", "Board", "board directors governance elections"),
])
label_store = EmbeddingStore(dim=32, kind="label", entries={
    e.id: toy_embed(e.definition, 32, 5) for e in catalog})
article_vec = toy_embed("drought forces irrigation limits near reservoirs", 32, 5)
fused = build_ee_fusion_input(article_vec, label_store, catalog)
print(f"\nfusion input: length {fused.shape[0]} = 32 article dims + "
      f"{len(catalog)} similarities")
print(f"  cosine to definitions: water={fused[32]:+.3f}, board={fused[33]:+.3f}")

# --- CNN over token embeddings: five filter widths, ReLU, global max-pool
tokens = toy_embed_tokens("drought forces irrigation limits near reservoirs",
                          dim=16, seed=5, max_len=12)
cnn_cfg = NeuralConfig(feature_maps=4, epochs=1, seed=2)
from esgclassify.neural import build_cnn
cnn = build_cnn(token_dim=16, n_outputs=2, cfg=cnn_cfg)
features = conv_forward(cnn.bank, tokens)
print(f"\nCNN features: {features.shape[0]} values "
      f"(5 widths x {cnn.bank.feature_maps} maps), "
      f"{int(np.sum(features > 0))} active after ReLU")
rep = extract_cnn_representation(cnn, tokens)
print(f"  eval-mode representation identical across calls: "
      f"{np.array_equal(rep, extract_cnn_representation(cnn, tokens))}")
probs = softmax(forward(model, x, mode='eval')[0])
print(f"\nsoftmax sanity: sums to {float(probs.sum()):.12f}")
