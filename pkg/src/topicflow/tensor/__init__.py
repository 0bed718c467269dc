"""Dense numerical kernels and trainable layers (float64, manual backprop)."""

from topicflow.tensor.params import Module, Parameter, glorot_uniform
from topicflow.tensor.functional import (
    ActivationKind,
    activation,
    activation_backward,
    log_softmax,
    logsumexp,
    sigmoid,
    softmax,
    softmax_cross_entropy,
)
from topicflow.tensor.layers import (
    BiRnn,
    Dense,
    Dropout,
    Embedding,
    GruCell,
    LstmCell,
    Rnn,
    TextCnn,
)
from topicflow.tensor.crf import LinearChainCrf
from topicflow.tensor.adam import Adam
from topicflow.tensor.vocab import PAD_INDEX, UNK_INDEX, EmbeddingTable, Vocabulary, load_embeddings
from topicflow.tensor.snapshot import read_snapshot, write_snapshot

__all__ = [
    "ActivationKind",
    "Adam",
    "BiRnn",
    "Dense",
    "Dropout",
    "Embedding",
    "EmbeddingTable",
    "GruCell",
    "LinearChainCrf",
    "LstmCell",
    "Module",
    "PAD_INDEX",
    "Parameter",
    "Rnn",
    "TextCnn",
    "UNK_INDEX",
    "Vocabulary",
    "activation",
    "activation_backward",
    "glorot_uniform",
    "load_embeddings",
    "log_softmax",
    "logsumexp",
    "read_snapshot",
    "sigmoid",
    "softmax",
    "softmax_cross_entropy",
    "write_snapshot",
]
