"""Vocabulary and embedding-table handling.

Index 0 is the padding token and index 1 the unknown token in every
vocabulary. The padding vector is all zeros; the unknown vector is drawn
from a fixed hash-seeded generator so it only depends on the embedding
dimension, never on load order or the rest of the table.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from collections.abc import Iterable

import numpy as np

from topicflow.errors import ParseError

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_INDEX = 0
UNK_INDEX = 1

_UNK_SEED = int.from_bytes(hashlib.sha256(b"topicflow:unknown-vector").digest()[:8], "little")


def _unknown_vector(dim: int) -> np.ndarray:
    return np.random.default_rng(_UNK_SEED).normal(0.0, 0.1, size=dim)


class Vocabulary:
    """Token-to-index map with reserved padding/unknown slots."""

    def __init__(self, tokens: Iterable[str] = ()):
        self._tokens = [PAD_TOKEN, UNK_TOKEN]
        self._index = {PAD_TOKEN: PAD_INDEX, UNK_TOKEN: UNK_INDEX}
        for tok in tokens:
            self.add(tok)

    @classmethod
    def from_corpus(cls, sentences: Iterable[Iterable[str]], min_count: int = 1) -> "Vocabulary":
        counts = Counter(tok for sent in sentences for tok in sent)
        kept = sorted(tok for tok, n in counts.items() if n >= min_count)
        return cls(kept)

    def add(self, token: str) -> int:
        idx = self._index.get(token)
        if idx is None:
            idx = len(self._tokens)
            self._index[token] = idx
            self._tokens.append(token)
        return idx

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self._index.get(tok, UNK_INDEX) for tok in tokens]

    def decode(self, index: int) -> str:
        return self._tokens[index]

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __len__(self) -> int:
        return len(self._tokens)


class EmbeddingTable:
    """A vocabulary plus its (V, dim) vector matrix."""

    def __init__(self, vocab: Vocabulary, vectors: np.ndarray):
        if vectors.shape[0] != len(vocab):
            raise ValueError(f"vector count {vectors.shape[0]} != vocabulary size {len(vocab)}")
        self.vocab = vocab
        self.vectors = np.asarray(vectors, dtype=np.float64)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @classmethod
    def random(cls, vocab: Vocabulary, dim: int, rng: np.random.Generator,
               scale: float = 0.1) -> "EmbeddingTable":
        vectors = rng.normal(0.0, scale, size=(len(vocab), dim))
        vectors[PAD_INDEX] = 0.0
        vectors[UNK_INDEX] = _unknown_vector(dim)
        return cls(vocab, vectors)


def load_embeddings(path: str) -> EmbeddingTable:
    """Reads a text embedding file: one ``token v1 ... vd`` line per token.

    The table gains two extra rows for the reserved tokens, so a file with
    N tokens yields N + 2 vectors.
    """
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    dim: int | None = None
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ParseError("embedding line needs a token and at least one value",
                                 path=path, line=lineno)
            token, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise ParseError(f"expected {dim} values, found {len(values)}",
                                 path=path, line=lineno)
            if token in seen:
                continue
            seen.add(token)
            try:
                row = np.array([float(v) for v in values])
            except ValueError as exc:
                raise ParseError(f"bad float: {exc}", path=path, line=lineno) from None
            tokens.append(token)
            rows.append(row)
    if dim is None:
        raise ParseError("embedding file is empty", path=path)
    vocab = Vocabulary(tokens)
    vectors = np.vstack([np.zeros(dim), _unknown_vector(dim)] + rows)
    return EmbeddingTable(vocab, vectors)


def write_embeddings(table: EmbeddingTable, path) -> None:
    """Writes the table in the text format ``load_embeddings`` reads.

    Reserved rows are skipped; the loader recreates them, and the padding
    and unknown vectors are fixed by construction, so a written table
    round-trips exactly.
    """
    tokens = table.vocab.tokens
    with open(path, "w", encoding="utf-8") as fh:
        for index in range(2, len(tokens)):
            values = " ".join(format(v, ".17g")
                              for v in table.vectors[index])
            fh.write(f"{tokens[index]} {values}\n")
