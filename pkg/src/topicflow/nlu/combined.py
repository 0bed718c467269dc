"""Joint intent+entity model: two stacked bidirectional LSTM layers.

The final states of the first layer feed the intent head; the second layer
runs over the first layer's per-token outputs and feeds a dense layer and a
CRF for entity tags. Both heads share the first layer, and training sums
both losses per example.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from topicflow.errors import ConfigurationError, ValidationError
from topicflow.nlu.classifier import IntentPrediction
from topicflow.nlu.data import TagSet, validate_iob_sequence
from topicflow.tensor import (
    PAD_INDEX,
    Adam,
    BiRnn,
    Dense,
    Embedding,
    EmbeddingTable,
    LinearChainCrf,
    LstmCell,
    Vocabulary,
    read_snapshot,
    softmax,
    softmax_cross_entropy,
    write_snapshot,
)
from topicflow.tensor.params import Module


@dataclass
class CombinedConfig:
    embed_dim: int = 32
    hidden: int = 64
    lr: float = 0.001
    epochs: int = 12
    seed: int = 0


class CombinedModel(Module):
    def __init__(self, labels: list[str], tagset: TagSet, vocab: Vocabulary,
                 config: CombinedConfig, rng: np.random.Generator | None = None):
        if rng is None:
            rng = np.random.default_rng(config.seed)
        self.labels = list(labels)
        self.tagset = tagset
        self.vocab = vocab
        self.config = config
        h = config.hidden
        table = EmbeddingTable.random(vocab, config.embed_dim, rng)
        self.embedding = Embedding(table.vectors, trainable=True)
        self.layer1 = BiRnn(LstmCell(config.embed_dim, h, rng), LstmCell(config.embed_dim, h, rng))
        self.layer2 = BiRnn(LstmCell(2 * h, h, rng), LstmCell(2 * h, h, rng))
        self.intent_out = Dense(2 * h, len(labels), rng)
        self.emit = Dense(2 * h, len(tagset), rng)
        self.crf = LinearChainCrf(len(tagset))

    def _encode(self, tokens: list[str]) -> list[int]:
        ids = self.vocab.encode(tokens)
        return ids if ids else [PAD_INDEX]

    def _forward(self, tokens: list[str]):
        x, idx = self.embedding.forward(self._encode(tokens))
        states1, cache1 = self.layer1.forward(x)
        final1 = self.layer1.final_states(states1)
        intent_logits, intent_cache = self.intent_out.forward(final1)
        states2, cache2 = self.layer2.forward(states1)
        emissions, emit_cache = self.emit.forward(states2)
        return intent_logits, emissions, (idx, cache1, intent_cache, cache2, emit_cache,
                                          states1.shape)

    def _backward(self, dintent: np.ndarray | None, demissions: np.ndarray | None,
                  cache) -> None:
        idx, cache1, intent_cache, cache2, emit_cache, states1_shape = cache
        dstates1 = np.zeros(states1_shape)
        if demissions is not None:
            dstates2 = self.emit.backward(demissions, emit_cache)
            dstates1 += self.layer2.backward(dstates2, cache2)
        if dintent is not None:
            dfinal = self.intent_out.backward(dintent, intent_cache)
            h = self.config.hidden
            dstates1[-1, :h] += dfinal[:h]
            dstates1[0, h:] += dfinal[h:]
        dx = self.layer1.backward(dstates1, cache1)
        self.embedding.backward(dx, idx)

    def predict_intent(self, tokens: list[str]) -> IntentPrediction:
        logits, _, _ = self._forward(tokens)
        probs = softmax(logits)
        top = int(probs.argmax())
        return IntentPrediction(label=self.labels[top], confidence=float(probs[top]),
                                distribution={l: float(p) for l, p in zip(self.labels, probs)})

    def tag(self, tokens: list[str]) -> list[str]:
        if not tokens:
            return []
        _, emissions, _ = self._forward(tokens)
        labels = self.tagset.labels
        return [labels[i] for i in self.crf.viterbi(emissions)]

    def save(self, directory: str) -> None:
        os.makedirs(directory, exist_ok=True)
        write_snapshot(os.path.join(directory, "weights.bin"),
                       {name: p.value for name, p in self.parameters().items()})
        meta = {
            "kind": "combined-nlu",
            "labels": self.labels,
            "types": list(self.tagset.types),
            "tokens": self.vocab.tokens[2:],
            "config": asdict(self.config),
        }
        with open(os.path.join(directory, "meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=1)

    @classmethod
    def load(cls, directory: str) -> "CombinedModel":
        with open(os.path.join(directory, "meta.json"), encoding="utf-8") as fh:
            meta = json.load(fh)
        if meta.get("kind") != "combined-nlu":
            raise ConfigurationError(f"{directory} does not hold a combined model")
        model = cls(meta["labels"], TagSet(tuple(meta["types"])), Vocabulary(meta["tokens"]),
                    CombinedConfig(**meta["config"]))
        model.load_state(read_snapshot(os.path.join(directory, "weights.bin")))
        return model


def train_combined(examples: list[tuple[list[str], str, list[str]]], tagset: TagSet,
                   config: CombinedConfig | None = None) -> CombinedModel:
    """Trains on (tokens, intent label, IOB tags) triples, summing both losses."""
    if not examples:
        raise ValidationError("combined training set is empty")
    labels = sorted({label for _, label, _ in examples})
    if len(labels) < 2:
        raise ValidationError(f"need at least 2 intent labels, got {labels}")
    for tokens, _, tags in examples:
        if len(tokens) != len(tags) or not tokens:
            raise ValidationError("each example needs equal, non-zero tokens and tags")
        validate_iob_sequence(tags, tagset)
    if config is None:
        config = CombinedConfig()
    rng = np.random.default_rng(config.seed)
    vocab = Vocabulary.from_corpus([tokens for tokens, _, _ in examples])
    model = CombinedModel(labels, tagset, vocab, config, rng)
    label_pos = {label: i for i, label in enumerate(labels)}
    tag_pos = {label: i for i, label in enumerate(tagset.labels)}
    optimizer = Adam(model.parameters(), lr=config.lr)
    order = np.arange(len(examples))
    model.epoch_losses = []
    for _ in range(config.epochs):
        rng.shuffle(order)
        for i in order:
            tokens, intent, tags = examples[i]
            optimizer.zero_grad()
            intent_logits, emissions, cache = model._forward(tokens)
            _, dintent = softmax_cross_entropy(intent_logits, label_pos[intent])
            gold = [tag_pos[t] for t in tags]
            _, ll_cache = model.crf.log_likelihood(emissions, gold)
            demissions = model.crf.log_likelihood_backward(-1.0, ll_cache)
            model._backward(dintent, demissions, cache)
            optimizer.step()
        model.epoch_losses.append(joint_losses(model, examples))
    return model


def joint_losses(model: CombinedModel, examples: list[tuple[list[str], str, list[str]]]
                 ) -> float:
    """Mean summed loss over a dataset (no parameter updates)."""
    label_pos = {label: i for i, label in enumerate(model.labels)}
    tag_pos = {label: i for i, label in enumerate(model.tagset.labels)}
    total = 0.0
    for tokens, intent, tags in examples:
        intent_logits, emissions, _ = model._forward(tokens)
        ce, _ = softmax_cross_entropy(intent_logits, label_pos[intent])
        ll, _ = model.crf.log_likelihood(emissions, [tag_pos[t] for t in tags])
        total += ce - ll
    return total / len(examples)
