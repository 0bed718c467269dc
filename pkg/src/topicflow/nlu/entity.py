"""BiLSTM-CRF entity tagger over IOB labels.

Emissions come from embeddings -> bidirectional LSTM -> dense; decoding is
exact Viterbi. Model output can still be IOB-inconsistent (transitions are
learned, not constrained), so span decoding repairs dangling I-x tags by
reading them as B-x.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from topicflow.errors import ConfigurationError, ValidationError
from topicflow.nlu.data import TagSet, validate_iob_sequence
from topicflow.nlu.tokenize import tokenize_with_spans
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
    write_snapshot,
)
from topicflow.tensor.params import Module


@dataclass
class EntityConfig:
    embed_dim: int = 32
    hidden: int = 100
    lr: float = 0.001
    epochs: int = 12
    seed: int = 0


@dataclass(frozen=True)
class EntitySpan:
    text: str
    begin: int
    end: int
    type: str


class EntityModel(Module):
    def __init__(self, tagset: TagSet, vocab: Vocabulary, config: EntityConfig,
                 rng: np.random.Generator | None = None):
        if rng is None:
            rng = np.random.default_rng(config.seed)
        self.tagset = tagset
        self.vocab = vocab
        self.config = config
        table = EmbeddingTable.random(vocab, config.embed_dim, rng)
        self.embedding = Embedding(table.vectors, trainable=True)
        self.birnn = BiRnn(LstmCell(config.embed_dim, config.hidden, rng),
                           LstmCell(config.embed_dim, config.hidden, rng))
        self.emit = Dense(2 * config.hidden, len(tagset), rng)
        self.crf = LinearChainCrf(len(tagset))

    def _encode(self, tokens: list[str]) -> list[int]:
        ids = self.vocab.encode(tokens)
        return ids if ids else [PAD_INDEX]

    def _emissions(self, tokens: list[str]):
        x, idx = self.embedding.forward(self._encode(tokens))
        states, rnn_cache = self.birnn.forward(x)
        emissions, emit_cache = self.emit.forward(states)
        return emissions, (idx, rnn_cache, emit_cache)

    def _backward(self, demissions: np.ndarray, cache) -> None:
        idx, rnn_cache, emit_cache = cache
        dstates = self.emit.backward(demissions, emit_cache)
        dx = self.birnn.backward(dstates, rnn_cache)
        self.embedding.backward(dx, idx)

    def tag(self, tokens: list[str]) -> list[str]:
        if not tokens:
            return []
        emissions, _ = self._emissions(tokens)
        path = self.crf.viterbi(emissions)
        labels = self.tagset.labels
        return [labels[i] for i in path]

    def extract(self, utterance: str) -> list[EntitySpan]:
        tokens, spans = tokenize_with_spans(utterance)
        if not tokens:
            return []
        tags = self.tag(tokens)
        out = []
        for span in decode_iob(tokens, tags):
            begin_char = spans[span.begin][0]
            end_char = spans[span.end - 1][1]
            out.append(EntitySpan(text=utterance[begin_char:end_char],
                                  begin=span.begin, end=span.end, type=span.type))
        return out

    def save(self, directory: str) -> None:
        os.makedirs(directory, exist_ok=True)
        write_snapshot(os.path.join(directory, "weights.bin"),
                       {name: p.value for name, p in self.parameters().items()})
        meta = {
            "kind": "entity-tagger",
            "types": list(self.tagset.types),
            "tokens": self.vocab.tokens[2:],
            "config": asdict(self.config),
        }
        with open(os.path.join(directory, "meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=1)

    @classmethod
    def load(cls, directory: str) -> "EntityModel":
        with open(os.path.join(directory, "meta.json"), encoding="utf-8") as fh:
            meta = json.load(fh)
        if meta.get("kind") != "entity-tagger":
            raise ConfigurationError(f"{directory} does not hold an entity tagger")
        model = cls(TagSet(tuple(meta["types"])), Vocabulary(meta["tokens"]),
                    EntityConfig(**meta["config"]))
        model.load_state(read_snapshot(os.path.join(directory, "weights.bin")))
        return model


def decode_iob(tokens: list[str], tags: list[str]) -> list[EntitySpan]:
    """Groups B-x (I-x)* runs into spans; a dangling I-x opens a new span."""
    if len(tokens) != len(tags):
        raise ValidationError("token/tag length mismatch")
    spans: list[EntitySpan] = []
    begin: int | None = None
    current: str | None = None

    def close(end: int) -> None:
        nonlocal begin, current
        if current is not None:
            spans.append(EntitySpan(text=" ".join(tokens[begin:end]),
                                    begin=begin, end=end, type=current))
        begin, current = None, None

    for i, tag in enumerate(tags):
        if tag == "O":
            close(i)
        elif tag.startswith("B-") or (tag.startswith("I-") and current != tag[2:]):
            close(i)
            begin, current = i, tag[2:]
        # I-x continuing the open span of type x: nothing to do
    close(len(tags))
    return spans


def encode_iob(spans: list[EntitySpan], n_tokens: int) -> list[str]:
    """Inverse of decode for non-overlapping spans."""
    tags = ["O"] * n_tokens
    for span in sorted(spans, key=lambda s: s.begin):
        if not 0 <= span.begin < span.end <= n_tokens:
            raise ValidationError(f"span [{span.begin}, {span.end}) outside {n_tokens} tokens")
        if any(tag != "O" for tag in tags[span.begin:span.end]):
            raise ValidationError("overlapping spans cannot be IOB-encoded")
        tags[span.begin] = f"B-{span.type}"
        for i in range(span.begin + 1, span.end):
            tags[i] = f"I-{span.type}"
    return tags


def train_entity(examples: list[tuple[list[str], list[str]]], tagset: TagSet,
                 config: EntityConfig | None = None) -> EntityModel:
    """Trains on (tokens, IOB tags) examples by exact CRF log-likelihood."""
    if not examples:
        raise ValidationError("entity training set is empty")
    for tokens, tags in examples:
        if len(tokens) != len(tags) or not tokens:
            raise ValidationError("each example needs equal, non-zero tokens and tags")
        validate_iob_sequence(tags, tagset)
    if config is None:
        config = EntityConfig()
    rng = np.random.default_rng(config.seed)
    vocab = Vocabulary.from_corpus([tokens for tokens, _ in examples])
    model = EntityModel(tagset, vocab, config, rng)
    label_pos = {label: i for i, label in enumerate(tagset.labels)}
    optimizer = Adam(model.parameters(), lr=config.lr)
    order = np.arange(len(examples))
    for _ in range(config.epochs):
        rng.shuffle(order)
        for i in order:
            tokens, tags = examples[i]
            optimizer.zero_grad()
            emissions, cache = model._emissions(tokens)
            gold = [label_pos[t] for t in tags]
            _, ll_cache = model.crf.log_likelihood(emissions, gold)
            demissions = model.crf.log_likelihood_backward(-1.0, ll_cache)
            model._backward(demissions, cache)
            optimizer.step()
    return model
