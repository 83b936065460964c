"""Feed-forward and convolutional classifiers with hand-written
backpropagation, inverted dropout, and softmax cross-entropy training.

Shapes follow the numpy convention: dense weights are (out, in), single
inputs are 1-d, batches are (batch, features). All gradients returned by
``backward`` are sums over the examples that produced the cache.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import LabelCatalog
from .embedding import EmbeddingStore, TokenMatrix, cosine_similarity
from .errors import InputError, TrainingDivergedError

CONV_WIDTHS = (1, 2, 3, 4, 5)


@dataclass
class DenseLayer:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: str = "identity"

    def __post_init__(self):
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise InputError(f"inconsistent dense shapes {self.W.shape} / {self.b.shape}")
        if self.activation not in ("relu", "identity"):
            raise InputError(f"unknown activation {self.activation!r}")


@dataclass
class NeuralConfig:
    learning_rate: float = 0.05
    momentum: float = 0.9
    epochs: int = 30
    batch_size: int = 16
    hidden_units: int = 128
    dropout: float = 0.2
    feature_maps: int = 32
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise InputError(f"dropout rate must be in [0, 1), got {self.dropout}")


@dataclass
class MlpClassifier:
    """Dense hidden stack, inverted dropout before the output layer,
    linear output producing one logit per catalog label."""

    hidden: list[DenseLayer]
    output: DenseLayer
    dropout_rate: float
    seed: int = 0

    @property
    def input_dim(self) -> int:
        first = self.hidden[0] if self.hidden else self.output
        return first.W.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.output.W.shape[0]


@dataclass
class ConvBank:
    """Five filter groups of widths 1..5 over d-dim token embeddings."""

    filters: list[np.ndarray]  # per width: (F, width, d)
    biases: list[np.ndarray]   # per width: (F,)
    widths: tuple[int, ...] = CONV_WIDTHS

    def __post_init__(self):
        if len(self.widths) != 5 or tuple(self.widths) != CONV_WIDTHS:
            raise InputError(f"conv bank requires widths {CONV_WIDTHS}, got {self.widths}")
        if len(self.filters) != 5 or len(self.biases) != 5:
            raise InputError("conv bank requires one filter group and bias per width")
        dims = set()
        maps = set()
        for k, W, b in zip(self.widths, self.filters, self.biases):
            if W.ndim != 3 or W.shape[1] != k:
                raise InputError(f"width-{k} filters have shape {W.shape}")
            if b.shape != (W.shape[0],):
                raise InputError(f"width-{k} biases have shape {b.shape}")
            maps.add(W.shape[0])
            dims.add(W.shape[2])
        if len(maps) != 1 or len(dims) != 1:
            raise InputError("all filter groups must share map count and token dim")

    @property
    def feature_maps(self) -> int:
        return self.filters[0].shape[0]

    @property
    def token_dim(self) -> int:
        return self.filters[0].shape[2]

    @property
    def output_dim(self) -> int:
        return 5 * self.feature_maps


@dataclass
class CnnClassifier:
    """Conv bank + ReLU + global max-pool, dropout, linear output layer."""

    bank: ConvBank
    output: DenseLayer
    dropout_rate: float
    seed: int = 0

    @property
    def n_outputs(self) -> int:
        return self.output.W.shape[0]


# ---------------------------------------------------------------------------
# Softmax cross-entropy


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, targets: np.ndarray) -> float:
    """Mean negative log-likelihood of integer targets under softmax logits."""
    z = logits - np.max(logits, axis=-1, keepdims=True)
    log_probs = z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))
    picked = log_probs[np.arange(logits.shape[0]), targets]
    return float(-np.mean(picked))


# ---------------------------------------------------------------------------
# MLP forward / backward


def _dropout_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray:
    return (rng.random(shape) >= rate).astype(np.float64)


def forward(model, x, mode: str = "eval", rng: np.random.Generator | None = None,
            dropout_mask: np.ndarray | None = None):
    """Run one input through the model; returns ``(logits, cache)``.

    Eval mode is deterministic (dropout is the identity). Train mode draws
    a fresh inverted-dropout mask from ``rng`` unless an explicit
    ``dropout_mask`` is supplied (gradient checks freeze the mask this way).
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if isinstance(model, MlpClassifier):
        logits, cache = _mlp_forward(model, batch, mode, rng, dropout_mask)
    elif isinstance(model, CnnClassifier):
        raise InputError("CNN forward takes token matrices; use forward_tokens()")
    else:
        raise InputError(f"unknown model type {type(model).__name__}")
    return (logits[0], cache) if single else (logits, cache)


def _mlp_forward(model: MlpClassifier, X: np.ndarray, mode: str,
                 rng: np.random.Generator | None,
                 dropout_mask: np.ndarray | None):
    if mode not in ("train", "eval"):
        raise InputError(f"mode must be 'train' or 'eval', got {mode!r}")
    if X.shape[1] != model.input_dim:
        raise InputError(f"input dim {X.shape[1]} != model dim {model.input_dim}")
    h = X
    hidden_caches = []
    for layer in model.hidden:
        z = h @ layer.W.T + layer.b
        a = np.maximum(z, 0.0) if layer.activation == "relu" else z
        hidden_caches.append((h, z))
        h = a
    mask = None
    kept = h
    if mode == "train" and model.dropout_rate > 0.0:
        if dropout_mask is not None:
            mask = np.asarray(dropout_mask, dtype=np.float64)
            if mask.shape != h.shape:
                raise InputError(f"dropout mask shape {mask.shape} != {h.shape}")
        else:
            if rng is None:
                rng = np.random.default_rng(model.seed)
            mask = _dropout_mask(rng, h.shape, model.dropout_rate)
        kept = h * mask / (1.0 - model.dropout_rate)
    logits = kept @ model.output.W.T + model.output.b
    cache = {"hidden": hidden_caches, "dropout_in": h, "mask": mask, "kept": kept}
    return logits, cache


def backward(model, cache, grad_logits: np.ndarray) -> dict[str, np.ndarray]:
    """Parameter gradients (summed over the cached batch) for the composed
    function realized at forward time, including its dropout mask."""
    if isinstance(model, MlpClassifier):
        return _mlp_backward(model, cache, grad_logits)
    if isinstance(model, CnnClassifier):
        return _cnn_backward(model, cache, grad_logits)
    raise InputError(f"unknown model type {type(model).__name__}")


def _mlp_backward(model: MlpClassifier, cache, grad_logits: np.ndarray):
    G = np.asarray(grad_logits, dtype=np.float64)
    if G.ndim == 1:
        G = G[None, :]
    kept = cache["kept"]
    if G.shape != (kept.shape[0], model.n_outputs):
        raise InputError(f"grad_logits shape {G.shape} does not match cache")
    grads: dict[str, np.ndarray] = {}
    grads["output.W"] = G.T @ kept
    grads["output.b"] = G.sum(axis=0)
    dh = G @ model.output.W
    if cache["mask"] is not None:
        dh = dh * cache["mask"] / (1.0 - model.dropout_rate)
    for idx in range(len(model.hidden) - 1, -1, -1):
        layer = model.hidden[idx]
        h_in, z = cache["hidden"][idx]
        dz = dh * (z > 0.0) if layer.activation == "relu" else dh
        grads[f"hidden{idx}.W"] = dz.T @ h_in
        grads[f"hidden{idx}.b"] = dz.sum(axis=0)
        dh = dz @ layer.W
    return grads


# ---------------------------------------------------------------------------
# Convolution forward / backward


def conv_forward(bank: ConvBank, tokens: TokenMatrix) -> np.ndarray:
    """ReLU conv features max-pooled over positions, concatenated by width
    then by feature map; length 5 * F."""
    feats, _ = _conv_forward(bank, tokens)
    return feats


def _conv_forward(bank: ConvBank, tokens: TokenMatrix):
    if tokens.dim != bank.token_dim:
        raise InputError(f"token dim {tokens.dim} != filter dim {bank.token_dim}")
    rows = tokens.trimmed()
    L = rows.shape[0]
    pooled_parts = []
    width_caches = []
    for W, b, k in zip(bank.filters, bank.biases, bank.widths):
        F = W.shape[0]
        if L >= k:
            # (L-k+1, k*d) windows against flattened filters
            windows = np.lib.stride_tricks.sliding_window_view(rows, (k, rows.shape[1]))
            windows = windows.reshape(L - k + 1, k * rows.shape[1])
            preact = windows @ W.reshape(F, -1).T + b
            act = np.maximum(preact, 0.0)
            arg = np.argmax(act, axis=0)
            pooled = act[arg, np.arange(F)]
            width_caches.append({"windows": windows, "preact": preact, "argmax": arg})
        else:
            pooled = np.maximum(b, 0.0)  # no valid window: bias through ReLU
            width_caches.append({"windows": None, "preact": None, "argmax": None})
        pooled_parts.append(pooled)
    features = np.concatenate(pooled_parts)
    return features, {"widths": width_caches, "rows": rows}


def forward_tokens(model: CnnClassifier, tokens: TokenMatrix, mode: str = "eval",
                   rng: np.random.Generator | None = None,
                   dropout_mask: np.ndarray | None = None):
    """CNN forward for one token matrix; returns ``(logits, cache)``."""
    if mode not in ("train", "eval"):
        raise InputError(f"mode must be 'train' or 'eval', got {mode!r}")
    features, conv_cache = _conv_forward(model.bank, tokens)
    mask = None
    kept = features
    if mode == "train" and model.dropout_rate > 0.0:
        if dropout_mask is not None:
            mask = np.asarray(dropout_mask, dtype=np.float64)
        else:
            if rng is None:
                rng = np.random.default_rng(model.seed)
            mask = _dropout_mask(rng, features.shape, model.dropout_rate)
        kept = features * mask / (1.0 - model.dropout_rate)
    logits = model.output.W @ kept + model.output.b
    cache = {"conv": conv_cache, "features": features, "mask": mask, "kept": kept}
    return logits, cache


def _cnn_backward(model: CnnClassifier, cache, grad_logits: np.ndarray):
    g = np.asarray(grad_logits, dtype=np.float64)
    kept = cache["kept"]
    grads: dict[str, np.ndarray] = {"output.W": np.outer(g, kept),
                                    "output.b": g.copy()}
    dfeat = model.output.W.T @ g
    if cache["mask"] is not None:
        dfeat = dfeat * cache["mask"] / (1.0 - model.dropout_rate)
    F = model.bank.feature_maps
    for w_idx, (W, b, k) in enumerate(zip(model.bank.filters, model.bank.biases,
                                          model.bank.widths)):
        dW = np.zeros_like(W)
        db = np.zeros_like(b)
        wc = cache["conv"]["widths"][w_idx]
        gpart = dfeat[w_idx * F:(w_idx + 1) * F]
        if wc["preact"] is None:
            db += gpart * (b > 0.0)
        else:
            preact, arg, windows = wc["preact"], wc["argmax"], wc["windows"]
            for f in range(F):
                if preact[arg[f], f] > 0.0:
                    dW[f] += gpart[f] * windows[arg[f]].reshape(k, -1)
                    db[f] += gpart[f]
        grads[f"conv{k}.W"] = dW
        grads[f"conv{k}.b"] = db
    return grads


def extract_cnn_representation(model: CnnClassifier, tokens: TokenMatrix) -> np.ndarray:
    """Post-pool feature vector in eval mode (the stacked SVM's input)."""
    return conv_forward(model.bank, tokens)


# ---------------------------------------------------------------------------
# Parameter access (shared by the optimizer and gradient checks)


def parameters(model) -> dict[str, np.ndarray]:
    if isinstance(model, MlpClassifier):
        params = {}
        for idx, layer in enumerate(model.hidden):
            params[f"hidden{idx}.W"] = layer.W
            params[f"hidden{idx}.b"] = layer.b
        params["output.W"] = model.output.W
        params["output.b"] = model.output.b
        return params
    if isinstance(model, CnnClassifier):
        params = {}
        for W, b, k in zip(model.bank.filters, model.bank.biases, model.bank.widths):
            params[f"conv{k}.W"] = W
            params[f"conv{k}.b"] = b
        params["output.W"] = model.output.W
        params["output.b"] = model.output.b
        return params
    raise InputError(f"unknown model type {type(model).__name__}")


def _he_uniform(rng: np.random.Generator, out_dim: int, in_dim: int) -> np.ndarray:
    limit = math.sqrt(6.0 / in_dim)
    return rng.uniform(-limit, limit, size=(out_dim, in_dim))


def build_mlp(input_dim: int, n_outputs: int, cfg: NeuralConfig) -> MlpClassifier:
    rng = np.random.default_rng(cfg.seed)
    hidden = [DenseLayer(W=_he_uniform(rng, cfg.hidden_units, input_dim),
                         b=np.zeros(cfg.hidden_units), activation="relu")]
    output = DenseLayer(W=_he_uniform(rng, n_outputs, cfg.hidden_units),
                        b=np.zeros(n_outputs), activation="identity")
    return MlpClassifier(hidden=hidden, output=output, dropout_rate=cfg.dropout,
                         seed=cfg.seed)


def build_cnn(token_dim: int, n_outputs: int, cfg: NeuralConfig) -> CnnClassifier:
    rng = np.random.default_rng(cfg.seed)
    filters = []
    biases = []
    for k in CONV_WIDTHS:
        limit = math.sqrt(6.0 / (k * token_dim))
        filters.append(rng.uniform(-limit, limit, size=(cfg.feature_maps, k, token_dim)))
        biases.append(np.zeros(cfg.feature_maps))
    bank = ConvBank(filters=filters, biases=biases)
    output = DenseLayer(W=_he_uniform(rng, n_outputs, bank.output_dim),
                        b=np.zeros(n_outputs), activation="identity")
    return CnnClassifier(bank=bank, output=output, dropout_rate=cfg.dropout,
                         seed=cfg.seed)


# ---------------------------------------------------------------------------
# Training


def train_classifier(inputs, target_indices: Sequence[int], n_classes: int,
                     cfg: NeuralConfig):
    """Train a softmax classifier by mini-batch SGD with momentum.

    ``inputs`` is either an (n, d) array (dense head) or a list of
    TokenMatrix (CNN head). Returns ``(model, loss_curve)`` with one mean
    training loss per epoch. Deterministic for a fixed config seed; raises
    :class:`TrainingDivergedError` if the loss leaves the reals.
    """
    targets = np.asarray(target_indices, dtype=np.int64)
    if len(np.unique(targets)) < 2:
        raise InputError("training requires at least two distinct target labels")
    if np.any(targets < 0) or np.any(targets >= n_classes):
        raise InputError("target index outside [0, n_classes)")

    token_mode = isinstance(inputs, (list, tuple)) and isinstance(inputs[0], TokenMatrix)
    if token_mode:
        n = len(inputs)
        model = build_cnn(inputs[0].dim, n_classes, cfg)
    else:
        inputs = np.asarray(inputs, dtype=np.float64)
        n = inputs.shape[0]
        model = build_mlp(inputs.shape[1], n_classes, cfg)
    if n != targets.shape[0]:
        raise InputError("one target per input required")

    rng = np.random.default_rng(np.random.PCG64(cfg.seed + 1))
    params = parameters(model)
    velocity = {name: np.zeros_like(p) for name, p in params.items()}
    curve = []
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        total_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch_idx = perm[start:start + cfg.batch_size]
            if token_mode:
                loss, grads = _cnn_batch_gradients(model, [inputs[i] for i in batch_idx],
                                                   targets[batch_idx], rng)
            else:
                loss, grads = _mlp_batch_gradients(model, inputs[batch_idx],
                                                   targets[batch_idx], rng)
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"loss became {loss} at epoch {epoch}; lower the learning rate")
            total_loss += loss * len(batch_idx)
            for name in params:
                velocity[name] = cfg.momentum * velocity[name] - cfg.learning_rate * grads[name]
                params[name] += velocity[name]
        curve.append(total_loss / n)
    return model, curve


def _mlp_batch_gradients(model, X, targets, rng):
    logits, cache = _mlp_forward(model, X, "train", rng, None)
    loss = cross_entropy(logits, targets)
    probs = softmax(logits)
    probs[np.arange(len(targets)), targets] -= 1.0
    grads = _mlp_backward(model, cache, probs / len(targets))
    return loss, grads


def _cnn_batch_gradients(model, token_batch, targets, rng):
    grads_total = None
    losses = []
    for tokens, target in zip(token_batch, targets):
        logits, cache = forward_tokens(model, tokens, "train", rng)
        probs = softmax(logits)
        losses.append(-math.log(max(probs[target], 1e-300)))
        grad_logits = probs.copy()
        grad_logits[target] -= 1.0
        grads = _cnn_backward(model, cache, grad_logits / len(token_batch))
        if grads_total is None:
            grads_total = grads
        else:
            for name in grads_total:
                grads_total[name] += grads[name]
    return float(np.mean(losses)), grads_total


# ---------------------------------------------------------------------------
# Fusion input for the embedding-enriched head


def build_ee_fusion_input(article_vec, label_store: EmbeddingStore,
                          catalog, mode: str = "similarities") -> np.ndarray:
    """Concatenate the article vector with its cosine similarity to every
    label definition (catalog order); ``mode="concat-defs"`` additionally
    appends the mean definition vector. ``catalog`` may be a LabelCatalog
    or any ordered sequence of label ids."""
    v = np.asarray(article_vec, dtype=np.float64)
    label_ids = catalog.ids() if isinstance(catalog, LabelCatalog) else tuple(catalog)
    missing = label_store.missing(label_ids)
    if missing:
        raise InputError(f"label store is missing definition vectors for: {missing}")
    sims = np.array([cosine_similarity(v, label_store.vector(label))
                     for label in label_ids])
    if mode == "similarities":
        return np.concatenate([v, sims])
    if mode == "concat-defs":
        defs = np.stack([label_store.vector(label) for label in label_ids])
        return np.concatenate([v, sims, defs.mean(axis=0)])
    raise InputError(f"unknown fusion mode {mode!r}")


def fusion_input_dim(article_dim: int, n_labels: int, mode: str = "similarities") -> int:
    if mode == "similarities":
        return article_dim + n_labels
    if mode == "concat-defs":
        return 2 * article_dim + n_labels
    raise InputError(f"unknown fusion mode {mode!r}")


# ---------------------------------------------------------------------------
# Serialization


def _dense_to_dict(layer: DenseLayer) -> dict:
    return {"W": [[float(x) for x in row] for row in layer.W],
            "b": [float(x) for x in layer.b], "activation": layer.activation}


def _dense_from_dict(doc: Mapping) -> DenseLayer:
    return DenseLayer(W=np.asarray(doc["W"], dtype=np.float64),
                      b=np.asarray(doc["b"], dtype=np.float64),
                      activation=doc["activation"])


def model_to_dict(model) -> dict:
    if isinstance(model, MlpClassifier):
        return {"type": "mlp", "seed": model.seed, "dropout": model.dropout_rate,
                "hidden": [_dense_to_dict(l) for l in model.hidden],
                "output": _dense_to_dict(model.output)}
    if isinstance(model, CnnClassifier):
        return {"type": "cnn", "seed": model.seed, "dropout": model.dropout_rate,
                "widths": list(model.bank.widths),
                "filters": [[[[float(x) for x in row] for row in f] for f in W]
                            for W in model.bank.filters],
                "biases": [[float(x) for x in b] for b in model.bank.biases],
                "output": _dense_to_dict(model.output)}
    raise InputError(f"unknown model type {type(model).__name__}")


def model_from_dict(doc: Mapping):
    try:
        if doc["type"] == "mlp":
            return MlpClassifier(hidden=[_dense_from_dict(d) for d in doc["hidden"]],
                                 output=_dense_from_dict(doc["output"]),
                                 dropout_rate=float(doc["dropout"]),
                                 seed=int(doc["seed"]))
        if doc["type"] == "cnn":
            bank = ConvBank(filters=[np.asarray(W, dtype=np.float64)
                                     for W in doc["filters"]],
                            biases=[np.asarray(b, dtype=np.float64)
                                    for b in doc["biases"]],
                            widths=tuple(doc["widths"]))
            return CnnClassifier(bank=bank, output=_dense_from_dict(doc["output"]),
                                 dropout_rate=float(doc["dropout"]),
                                 seed=int(doc["seed"]))
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed neural model document: {exc}") from exc
    raise InputError(f"unknown neural model type {doc.get('type')!r}")
