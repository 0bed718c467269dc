"""The topic-switch detector.

Two convolution banks, one over the previous bot response and one over
the user message, each pool a frozen-embedding token matrix into a fixed
vector. The recurrent layer reads those two vectors in order, response
first, and its final hidden state feeds a 2-class softmax: index 0 means
stay on the current sub-dialogue, index 1 means switch.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from topicflow.errors import ConfigurationError, StorageError
from topicflow.nlu.tokenize import tokenize
from topicflow.tensor import (
    Adam, Dense, Embedding, EmbeddingTable, LstmCell, Module, TextCnn,
)
from topicflow.tensor.functional import softmax, softmax_cross_entropy
from topicflow.tensor.snapshot import read_snapshot, write_snapshot
from topicflow.tensor.vocab import PAD_INDEX

from topicflow.switch.dataset import SwitchExample

META_KIND = "switch-detector"


@dataclass(frozen=True)
class SwitchConfig:
    conv_widths: tuple[int, ...] = (1, 2, 3)
    conv_filters: int = 16
    lstm_hidden: int = 32
    learning_rate: float = 0.005
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 8


class SwitchModel(Module):
    def __init__(self, table: EmbeddingTable, config: SwitchConfig,
                 rng: np.random.Generator):
        self.config = config
        self.vocab = table.vocab
        self.embedding = Embedding(table.vectors, trainable=False)
        self.response_cnn = TextCnn(table.dim, config.conv_widths,
                                    config.conv_filters, rng)
        self.message_cnn = TextCnn(table.dim, config.conv_widths,
                                   config.conv_filters, rng)
        self.cell = LstmCell(self.response_cnn.out_dim, config.lstm_hidden, rng)
        self.out = Dense(config.lstm_hidden, 2, rng)
        self.train_report: dict = {}

    def _encode(self, text: str) -> np.ndarray:
        idx = self.vocab.encode(tokenize(text))
        if not idx:
            idx = [PAD_INDEX]
        return np.asarray(idx, dtype=np.intp)

    def _pool(self, cnn: TextCnn, text: str):
        embedded, _ = self.embedding.forward(self._encode(text))
        return cnn.forward(embedded, self.embedding.vectors.value[PAD_INDEX])

    def forward(self, prev_response: str, message: str):
        response_vec, response_cache = self._pool(self.response_cnn, prev_response)
        message_vec, message_cache = self._pool(self.message_cnn, message)
        state = self.cell.init_state()
        _, state, first_cache = self.cell.step(response_vec, state)
        h, state, second_cache = self.cell.step(message_vec, state)
        logits, out_cache = self.out.forward(h)
        return logits, (response_cache, message_cache, first_cache,
                        second_cache, out_cache)

    def backward(self, dlogits: np.ndarray, cache) -> None:
        response_cache, message_cache, first_cache, second_cache, out_cache = cache
        dh = self.out.backward(dlogits, out_cache)
        dmessage_vec, dstate = self.cell.step_backward(dh, None, second_cache)
        dresponse_vec, _ = self.cell.step_backward(
            np.zeros_like(dh), dstate, first_cache)
        self.message_cnn.backward(dmessage_vec, message_cache)
        self.response_cnn.backward(dresponse_vec, response_cache)

    def probabilities(self, prev_response: str, message: str) -> np.ndarray:
        logits, _ = self.forward(prev_response, message)
        return softmax(logits)


def detect_switch(model: SwitchModel, prev_response: str, message: str) -> float:
    """Probability that the user is abandoning the current sub-dialogue."""
    return float(model.probabilities(prev_response, message)[1])


def evaluate_switch_accuracy(model: SwitchModel,
                             examples: list[SwitchExample],
                             threshold: float = 0.5) -> float:
    if not examples:
        return 0.0
    correct = sum(
        1 for ex in examples
        if (detect_switch(model, ex.prev_response, ex.message) > threshold) == bool(ex.label))
    return correct / len(examples)


def train_switch(dataset: list[SwitchExample], config: SwitchConfig,
                 seed: int, *, table: EmbeddingTable) -> SwitchModel:
    """Per-example Adam steps over shuffled epochs; deterministic per seed."""
    if not dataset:
        raise ConfigurationError("switch training needs a non-empty dataset")
    init_seq, shuffle_seq = np.random.SeedSequence(seed).spawn(2)
    model = SwitchModel(table, config, np.random.default_rng(init_seq))
    shuffle_rng = np.random.default_rng(shuffle_seq)
    optimizer = Adam(model.parameters(), lr=config.learning_rate,
                     beta1=config.adam_beta1, beta2=config.adam_beta2,
                     eps=config.adam_eps)
    curve = []
    for _ in range(config.epochs):
        order = shuffle_rng.permutation(len(dataset))
        loss_sum = 0.0
        for i in order:
            example = dataset[i]
            optimizer.zero_grad()
            logits, cache = model.forward(example.prev_response, example.message)
            loss, dlogits = softmax_cross_entropy(logits, example.label)
            model.backward(dlogits, cache)
            optimizer.step()
            loss_sum += loss
        curve.append(loss_sum / len(dataset))
    model.train_report = {"examples": len(dataset), "loss_curve": curve}
    return model


def save_switch(model: SwitchModel, root: str | Path) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    write_snapshot(str(root / "model.bin"), model.state())
    meta = {
        "kind": META_KIND,
        "config": asdict(model.config),
        "embed_dim": model.embedding.dim,
        "train_report": model.train_report,
    }
    (root / "meta.json").write_text(json.dumps(meta, indent=2) + "\n",
                                    encoding="utf-8")
    return root


def load_switch(root: str | Path, table: EmbeddingTable) -> SwitchModel:
    root = Path(root)
    meta_path = root / "meta.json"
    if not meta_path.exists():
        raise StorageError(f"no saved switch detector under {root}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    if meta.get("kind") != META_KIND:
        raise StorageError(f"{meta_path} is not a switch detector snapshot")
    if meta["embed_dim"] != table.dim:
        raise ConfigurationError(
            f"detector was trained on {meta['embed_dim']}-dim word vectors, "
            f"table has {table.dim}")
    raw = dict(meta["config"])
    raw["conv_widths"] = tuple(raw["conv_widths"])
    config = SwitchConfig(**raw)
    model = SwitchModel(table, config, np.random.default_rng(0))
    model.load_state(read_snapshot(str(root / "model.bin")))
    model.train_report = meta.get("train_report", {})
    return model
