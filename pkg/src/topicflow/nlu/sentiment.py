"""Recurrent sentiment scorer and entity-level sentiment aggregation.

The per-text score runs tokens through embeddings, a bidirectional
recurrent layer (GRU by default, LSTM by config), and a sigmoid head,
yielding a value from 0 (negative) to 1 (positive). Entity sentiment
averages per-text scores over documents matching the entity in a local
corpus (case-insensitive substring search, first N matches).
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from topicflow.errors import ConfigurationError, NoEvidenceError, ValidationError
from topicflow.nlu.tokenize import tokenize
from topicflow.tensor import (
    PAD_INDEX,
    Adam,
    BiRnn,
    Dense,
    Embedding,
    EmbeddingTable,
    GruCell,
    LstmCell,
    Vocabulary,
    read_snapshot,
    sigmoid,
    write_snapshot,
)
from topicflow.tensor.params import Module


@dataclass
class SentimentConfig:
    embed_dim: int = 32
    hidden: int = 32
    cell: str = "gru"
    max_tokens: int = 100
    lr: float = 0.001
    epochs: int = 5
    seed: int = 0


def _make_cell(kind: str, in_dim: int, hidden: int, rng):
    if kind == "gru":
        return GruCell(in_dim, hidden, rng)
    if kind == "lstm":
        return LstmCell(in_dim, hidden, rng)
    raise ConfigurationError(f"unknown recurrent cell {kind!r} (use 'gru' or 'lstm')")


class SentimentModel(Module):
    def __init__(self, vocab: Vocabulary, config: SentimentConfig,
                 rng: np.random.Generator | None = None):
        if rng is None:
            rng = np.random.default_rng(config.seed)
        self.vocab = vocab
        self.config = config
        table = EmbeddingTable.random(vocab, config.embed_dim, rng)
        self.embedding = Embedding(table.vectors, trainable=True)
        self.birnn = BiRnn(_make_cell(config.cell, config.embed_dim, config.hidden, rng),
                           _make_cell(config.cell, config.embed_dim, config.hidden, rng))
        self.head = Dense(2 * config.hidden, 1, rng)

    def _encode(self, text: str) -> list[int]:
        ids = self.vocab.encode(tokenize(text)[:self.config.max_tokens])
        return ids if ids else [PAD_INDEX]

    def _forward(self, text: str):
        x, idx = self.embedding.forward(self._encode(text))
        states, rnn_cache = self.birnn.forward(x)
        final = self.birnn.final_states(states)
        logit, head_cache = self.head.forward(final)
        return float(logit[0]), (idx, rnn_cache, head_cache, states.shape)

    def _backward(self, dlogit: float, cache) -> None:
        idx, rnn_cache, head_cache, states_shape = cache
        dfinal = self.head.backward(np.array([dlogit]), head_cache)
        h = self.config.hidden
        dstates = np.zeros(states_shape)
        dstates[-1, :h] = dfinal[:h]
        dstates[0, h:] = dfinal[h:]
        dx = self.birnn.backward(dstates, rnn_cache)
        self.embedding.backward(dx, idx)

    def score(self, text: str) -> float:
        logit, _ = self._forward(text)
        return float(sigmoid(np.array([logit]))[0])

    def save(self, directory: str) -> None:
        os.makedirs(directory, exist_ok=True)
        write_snapshot(os.path.join(directory, "weights.bin"),
                       {name: p.value for name, p in self.parameters().items()})
        meta = {
            "kind": "sentiment-scorer",
            "tokens": self.vocab.tokens[2:],
            "config": asdict(self.config),
        }
        with open(os.path.join(directory, "meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=1)

    @classmethod
    def load(cls, directory: str) -> "SentimentModel":
        with open(os.path.join(directory, "meta.json"), encoding="utf-8") as fh:
            meta = json.load(fh)
        if meta.get("kind") != "sentiment-scorer":
            raise ConfigurationError(f"{directory} does not hold a sentiment scorer")
        model = cls(Vocabulary(meta["tokens"]), SentimentConfig(**meta["config"]))
        model.load_state(read_snapshot(os.path.join(directory, "weights.bin")))
        return model


def train_sentiment(pairs: list[tuple[int, str]],
                    config: SentimentConfig | None = None) -> SentimentModel:
    """Trains on (label, text) pairs with per-example cross-entropy."""
    if not pairs:
        raise ValidationError("sentiment training set is empty")
    if {label for label, _ in pairs} != {0, 1}:
        raise ValidationError("sentiment data must contain both labels 0 and 1")
    if config is None:
        config = SentimentConfig()
    rng = np.random.default_rng(config.seed)
    vocab = Vocabulary.from_corpus([tokenize(text)[:config.max_tokens] for _, text in pairs])
    model = SentimentModel(vocab, config, rng)
    optimizer = Adam(model.parameters(), lr=config.lr)
    order = np.arange(len(pairs))
    for _ in range(config.epochs):
        rng.shuffle(order)
        for i in order:
            label, text = pairs[i]
            optimizer.zero_grad()
            logit, cache = model._forward(text)
            p = float(sigmoid(np.array([logit]))[0])
            model._backward(p - float(label), cache)  # d(BCE)/dlogit
            optimizer.step()
    return model


def entity_sentiment(model: SentimentModel, entity: str, corpus: list[str],
                     top_n: int = 50) -> float:
    """Mean score over the first ``top_n`` corpus texts mentioning the entity."""
    needle = entity.lower()
    if not needle.strip():
        raise NoEvidenceError("empty entity text")
    matches = [text for text in corpus if needle in text.lower()][:top_n]
    if not matches:
        raise NoEvidenceError(f"no corpus text mentions {entity!r}")
    return float(np.mean([model.score(text) for text in matches]))
