"""Multi-channel CNN text classifier.

One architecture serves three jobs: intent classification, the dialogue-act
featurizer (its hidden layer is the feature vector), and the sentiment
feature extractor used by dialogue managers. Pipeline per utterance:

    tokens -> embeddings -> convolution bank (max-pooled) -> dropout
           -> hidden dense (relu) -> dropout -> dense -> softmax
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from topicflow.errors import ConfigurationError, ValidationError
from topicflow.nlu.tokenize import tokenize
from topicflow.tensor import (
    PAD_INDEX,
    Adam,
    Dense,
    Dropout,
    Embedding,
    EmbeddingTable,
    TextCnn,
    Vocabulary,
    read_snapshot,
    softmax,
    softmax_cross_entropy,
    write_snapshot,
)
from topicflow.tensor.params import Module


@dataclass
class ClassifierConfig:
    embed_dim: int = 32
    widths: tuple[int, ...] = (1, 2, 3, 4, 5)
    filters_per_width: int = 32
    hidden: int = 64
    conv_keep_prob: float = 0.9
    fc_keep_prob: float = 0.9
    lr: float = 0.001
    epochs: int = 12
    seed: int = 0


@dataclass(frozen=True)
class IntentPrediction:
    label: str
    confidence: float
    distribution: dict[str, float] = field(default_factory=dict)


class TextCnnClassifier(Module):
    def __init__(self, labels: list[str], vocab: Vocabulary, config: ClassifierConfig,
                 rng: np.random.Generator | None = None):
        if rng is None:
            rng = np.random.default_rng(config.seed)
        self.labels = list(labels)
        self.vocab = vocab
        self.config = config
        table = EmbeddingTable.random(vocab, config.embed_dim, rng)
        self.embedding = Embedding(table.vectors, trainable=True)
        self.cnn = TextCnn(config.embed_dim, config.widths, config.filters_per_width, rng)
        self.conv_drop = Dropout(config.conv_keep_prob)
        self.fc_drop = Dropout(config.fc_keep_prob)
        self.hidden = Dense(self.cnn.out_dim, config.hidden, rng, act="relu")
        self.out = Dense(config.hidden, len(labels), rng)

    def _encode(self, utterance: str) -> list[int]:
        ids = self.vocab.encode(tokenize(utterance))
        return ids if ids else [PAD_INDEX]

    def _forward(self, utterance: str, rng=None, training: bool = False):
        idx = self._encode(utterance)
        x, idx = self.embedding.forward(idx)
        pad_row = self.embedding.vectors.value[PAD_INDEX]
        feats, cnn_cache = self.cnn.forward(x, pad_row)
        feats_d, conv_mask = self.conv_drop.forward(feats, rng, training)
        hid, hid_cache = self.hidden.forward(feats_d)
        hid_d, fc_mask = self.fc_drop.forward(hid, rng, training)
        logits, out_cache = self.out.forward(hid_d)
        return logits, (idx, cnn_cache, conv_mask, hid_cache, fc_mask, out_cache, hid)

    def _backward(self, dlogits: np.ndarray, cache) -> None:
        idx, cnn_cache, conv_mask, hid_cache, fc_mask, out_cache, _ = cache
        dhid_d = self.out.backward(dlogits, out_cache)
        dhid = self.fc_drop.backward(dhid_d, fc_mask)
        dfeats_d = self.hidden.backward(dhid, hid_cache)
        dfeats = self.conv_drop.backward(dfeats_d, conv_mask)
        dx, dpad = self.cnn.backward(dfeats, cnn_cache)
        self.embedding.backward(dx, idx)
        if self.embedding.trainable:
            self.embedding.vectors.grad[PAD_INDEX] += dpad

    def predict(self, utterance: str) -> IntentPrediction:
        logits, _ = self._forward(utterance)
        probs = softmax(logits)
        top = int(probs.argmax())
        distribution = {label: float(p) for label, p in zip(self.labels, probs)}
        return IntentPrediction(label=self.labels[top], confidence=float(probs[top]),
                                distribution=distribution)

    def hidden_features(self, utterance: str) -> np.ndarray:
        """Output of the dense layer before the classification head."""
        _, cache = self._forward(utterance)
        return cache[-1].copy()

    def save(self, directory: str) -> None:
        os.makedirs(directory, exist_ok=True)
        write_snapshot(os.path.join(directory, "weights.bin"),
                       {name: p.value for name, p in self.parameters().items()})
        meta = {
            "kind": "text-cnn-classifier",
            "labels": self.labels,
            "tokens": self.vocab.tokens[2:],
            "config": asdict(self.config),
        }
        with open(os.path.join(directory, "meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=1)

    @classmethod
    def load(cls, directory: str) -> "TextCnnClassifier":
        with open(os.path.join(directory, "meta.json"), encoding="utf-8") as fh:
            meta = json.load(fh)
        if meta.get("kind") != "text-cnn-classifier":
            raise ConfigurationError(f"{directory} does not hold a text classifier")
        config = ClassifierConfig(**{**meta["config"], "widths": tuple(meta["config"]["widths"])})
        model = cls(meta["labels"], Vocabulary(meta["tokens"]), config)
        model.load_state(read_snapshot(os.path.join(directory, "weights.bin")))
        return model


def train_classifier(pairs: list[tuple[str, str]],
                     config: ClassifierConfig | None = None) -> TextCnnClassifier:
    """Trains on (utterance, label) pairs with per-example Adam steps."""
    if not pairs:
        raise ValidationError("classifier training set is empty")
    labels = sorted({label for _, label in pairs})
    if len(labels) < 2:
        raise ValidationError(f"need at least 2 labels, got {labels}")
    if config is None:
        config = ClassifierConfig()
    rng = np.random.default_rng(config.seed)
    vocab = Vocabulary.from_corpus([tokenize(text) for text, _ in pairs])
    model = TextCnnClassifier(labels, vocab, config, rng)
    label_pos = {label: i for i, label in enumerate(labels)}
    optimizer = Adam(model.parameters(), lr=config.lr)
    order = np.arange(len(pairs))
    for _ in range(config.epochs):
        rng.shuffle(order)
        for i in order:
            text, label = pairs[i]
            optimizer.zero_grad()
            logits, cache = model._forward(text, rng, training=True)
            _, dlogits = softmax_cross_entropy(logits, label_pos[label])
            model._backward(dlogits, cache)
            optimizer.step()
    return model
