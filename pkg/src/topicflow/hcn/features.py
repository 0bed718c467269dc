"""Turn featurization for the per-dialogue response managers.

Each user message becomes one fixed-length vector built from up to four
segments, concatenated in this order:

  1. input features from the trained featurizer (one of three variants:
     a convolution bank over frozen word vectors, an input LSTM over the
     same vectors, or the untrained average-embedding + bag-of-words pair),
  2. hidden features from a frozen sentiment classifier,
  3. hidden features from a frozen dialogue-act classifier,
  4. a one-hot of the previously predicted response class.

Only segment 1 receives gradients; the frozen segments are produced by
models trained elsewhere and must stay byte-identical while the manager
trains.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from topicflow.errors import ConfigurationError
from topicflow.nlu.tokenize import tokenize
from topicflow.tensor import Dropout, Embedding, EmbeddingTable, LstmCell, Module, Rnn, TextCnn, Vocabulary
from topicflow.tensor.vocab import PAD_INDEX

INPUT_MODES = ("plain", "cnn", "rnn")


@dataclass(frozen=True)
class FrozenFeatures:
    """A fixed feature function: name, output width, and the function itself.

    The callable maps an utterance to a 1-D float vector of length ``dim``
    and must not change while a manager trains.
    """

    name: str
    dim: int
    fn: Callable[[str], np.ndarray]


def classifier_features(name: str, classifier) -> FrozenFeatures:
    """Wraps a trained text classifier's hidden layer as frozen features."""
    return FrozenFeatures(name=name, dim=classifier.config.hidden,
                          fn=classifier.hidden_features)


@dataclass(frozen=True)
class TurnFeatures:
    """One featurized turn, kept in segments so callers can inspect them."""

    input_features: np.ndarray
    sentiment_features: np.ndarray
    act_features: np.ndarray
    prev_action: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.input_features, self.sentiment_features,
                               self.act_features, self.prev_action])


class TurnFeaturizer(Module):
    """Builds the message-feature segments (everything except prev-action).

    ``mode`` selects the trained variant: "cnn" and "rnn" train a
    convolution bank or an input LSTM over the frozen embedding table;
    "plain" uses the untrained embedding average plus bag-of-words counts
    and therefore needs ``bow_vocab``.
    """

    def __init__(self, mode: str, table: EmbeddingTable, rng: np.random.Generator, *,
                 conv_widths: tuple[int, ...] = (1, 2, 3, 4, 5), conv_filters: int = 21,
                 conv_keep_prob: float = 1.0, input_rnn_hidden: int = 64,
                 input_rnn_keep_prob: float = 1.0, input_activation: str = "tanh",
                 bow_vocab: Vocabulary | None = None,
                 sentiment: FrozenFeatures | None = None,
                 acts: FrozenFeatures | None = None):
        if mode not in INPUT_MODES:
            raise ConfigurationError(f"unknown input mode {mode!r}; expected one of {INPUT_MODES}")
        self.mode = mode
        self.vocab = table.vocab
        self.embedding = Embedding(table.vectors, trainable=False)
        self.sentiment = sentiment
        self.acts = acts
        self.bow_vocab = None
        if mode == "cnn":
            self.cnn = TextCnn(table.dim, conv_widths, conv_filters, rng)
            self.conv_drop = Dropout(conv_keep_prob)
            self._input_dim = self.cnn.out_dim
        elif mode == "rnn":
            self.input_rnn = Rnn(LstmCell(table.dim, input_rnn_hidden, rng, act=input_activation))
            self.input_drop = Dropout(input_rnn_keep_prob)
            self._input_dim = input_rnn_hidden
        else:
            if bow_vocab is None:
                raise ConfigurationError("plain input mode needs a bag-of-words vocabulary")
            self.bow_vocab = bow_vocab
            self._input_dim = table.dim + len(bow_vocab)
        # Frozen providers are deterministic, so their outputs are memoized
        # per utterance; callers must treat the returned arrays as read-only.
        self._frozen_memo: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    @property
    def input_dim(self) -> int:
        return self._input_dim

    @property
    def feature_dim(self) -> int:
        """Message-feature width: input segment plus both frozen segments."""
        sent = self.sentiment.dim if self.sentiment else 0
        acts = self.acts.dim if self.acts else 0
        return self._input_dim + sent + acts

    def _encode(self, utterance: str) -> np.ndarray:
        idx = self.vocab.encode(tokenize(utterance))
        if not idx:
            idx = [PAD_INDEX]
        return np.asarray(idx, dtype=np.intp)

    def _frozen(self, utterance: str) -> tuple[np.ndarray, np.ndarray]:
        hit = self._frozen_memo.get(utterance)
        if hit is not None:
            return hit
        sent = self.sentiment.fn(utterance) if self.sentiment else np.zeros(0)
        acts = self.acts.fn(utterance) if self.acts else np.zeros(0)
        self._frozen_memo[utterance] = (sent, acts)
        return sent, acts

    def featurize(self, utterance: str, prev_action: np.ndarray, *,
                  training: bool = False, rng: np.random.Generator | None = None):
        """Returns (TurnFeatures, cache); the cache feeds ``backward``."""
        sent, acts = self._frozen(utterance)
        if self.mode == "cnn":
            idx = self._encode(utterance)
            embedded, _ = self.embedding.forward(idx)
            pooled, conv_cache = self.cnn.forward(embedded, self.embedding.vectors.value[PAD_INDEX])
            dropped, drop_mask = self.conv_drop.forward(pooled, rng, training)
            feats = TurnFeatures(dropped, sent, acts, prev_action)
            return feats, ("cnn", conv_cache, drop_mask)
        if self.mode == "rnn":
            idx = self._encode(utterance)
            embedded, _ = self.embedding.forward(idx)
            outs, rnn_cache = self.input_rnn.forward(embedded)
            dropped, drop_mask = self.input_drop.forward(outs[-1], rng, training)
            feats = TurnFeatures(dropped, sent, acts, prev_action)
            return feats, ("rnn", rnn_cache, drop_mask, outs.shape)
        tokens = tokenize(utterance)
        idx = self.vocab.encode(tokens)
        if idx:
            average = self.embedding.vectors.value[np.asarray(idx, dtype=np.intp)].mean(axis=0)
        else:
            average = np.zeros(self.embedding.dim)
        counts = np.bincount(self.bow_vocab.encode(tokens), minlength=len(self.bow_vocab))
        feats = TurnFeatures(np.concatenate([average, counts.astype(np.float64)]),
                             sent, acts, prev_action)
        return feats, ("plain",)

    def backward(self, dmessage: np.ndarray, cache) -> None:
        """Routes the gradient of the message segments into trained parts.

        ``dmessage`` covers ``feature_dim`` entries (no prev-action slice);
        the frozen segments absorb nothing.
        """
        dinput = dmessage[:self._input_dim]
        if cache[0] == "cnn":
            _, conv_cache, drop_mask = cache
            dpooled = self.conv_drop.backward(dinput, drop_mask)
            self.cnn.backward(dpooled, conv_cache)
        elif cache[0] == "rnn":
            _, rnn_cache, drop_mask, shape = cache
            dfinal = self.input_drop.backward(dinput, drop_mask)
            douts = np.zeros(shape)
            douts[-1] = dfinal
            self.input_rnn.backward(douts, rnn_cache)
