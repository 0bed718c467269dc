"""Saving, loading, and caching trained managers.

Every dialogue gets one directory under the model root:

    <dialogue-id>/model.bin       trained weights (tensor snapshot)
    <dialogue-id>/inventory.tsv   class id, node id, kind
    <dialogue-id>/mask.tsv        action mask table
    <dialogue-id>/meta.json       hyperparameters, response texts, dims

The frozen word-vector table and frozen feature providers are not stored;
the loader receives them again and checks their widths against the
recorded ones.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from topicflow.dialogue.compile import ActionMaskTable
from topicflow.dialogue.graph import DialogueNode
from topicflow.errors import ConfigurationError, StorageError
from topicflow.hcn.features import FrozenFeatures, TurnFeaturizer
from topicflow.hcn.model import HcnHyperparams, HcnModel
from topicflow.tensor import EmbeddingTable, Vocabulary
from topicflow.tensor.snapshot import read_snapshot, write_snapshot

META_KIND = "dialogue-manager"


def save_hcn(model: HcnModel, root: str | Path) -> Path:
    """Writes the model directory under ``root``; returns its path."""
    directory = Path(root) / model.dialogue_id
    directory.mkdir(parents=True, exist_ok=True)
    write_snapshot(str(directory / "model.bin"), model.state())
    lines = [f"{cls}\t{node}\t{kind}" for cls, node, kind in model.inventory]
    (directory / "inventory.tsv").write_text("\n".join(lines) + "\n")
    (directory / "mask.tsv").write_text(model.mask_table.to_tsv())
    bow = model.featurizer.bow_vocab
    meta = {
        "kind": META_KIND,
        "dialogue": model.dialogue_id,
        "epochs_used": model.epochs_used,
        "hyperparams": dataclasses.asdict(model.hyper),
        "embed_dim": model.featurizer.embedding.dim,
        "frozen_dims": {
            "sentiment": model.featurizer.sentiment.dim if model.featurizer.sentiment else None,
            "acts": model.featurizer.acts.dim if model.featurizer.acts else None,
        },
        "bow_tokens": bow.tokens[2:] if bow is not None else None,
        "nodes": [
            {"class": cls, "kind": node.kind, "texts": list(node.texts), "hook": node.hook}
            for cls, node in ((c, model.nodes[c]) for c in model.classes)
        ],
        "train_report": model.train_report,
    }
    (directory / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return directory


def _check_frozen(name: str, given: FrozenFeatures | None, recorded,
                  dialogue_id: str) -> None:
    given_dim = given.dim if given else None
    if given_dim != recorded:
        raise ConfigurationError(
            f"dialogue {dialogue_id!r} was trained with {name} feature width "
            f"{recorded}, got {given_dim}")


def load_hcn(root: str | Path, dialogue_id: str, table: EmbeddingTable, *,
             sentiment: FrozenFeatures | None = None,
             acts: FrozenFeatures | None = None) -> HcnModel:
    """Rebuilds a saved manager; companions must match the training setup."""
    directory = Path(root) / dialogue_id
    meta_path = directory / "meta.json"
    if not meta_path.exists():
        raise StorageError(f"no saved manager for dialogue {dialogue_id!r} under {root}")
    meta = json.loads(meta_path.read_text())
    if meta.get("kind") != META_KIND:
        raise StorageError(f"{meta_path} is not a saved dialogue manager")
    if table.dim != meta["embed_dim"]:
        raise ConfigurationError(
            f"dialogue {dialogue_id!r} was trained with {meta['embed_dim']}-dim "
            f"word vectors, got {table.dim}")
    _check_frozen("sentiment", sentiment, meta["frozen_dims"]["sentiment"], dialogue_id)
    _check_frozen("dialogue-act", acts, meta["frozen_dims"]["acts"], dialogue_id)

    hyper_fields = {f.name for f in dataclasses.fields(HcnHyperparams)}
    raw = {k: v for k, v in meta["hyperparams"].items() if k in hyper_fields}
    if "conv_widths" in raw:
        raw["conv_widths"] = tuple(raw["conv_widths"])
    hyper = HcnHyperparams(**raw)

    inventory = []
    for line in (directory / "inventory.tsv").read_text().splitlines():
        cls, node_id, kind = line.split("\t")
        inventory.append((cls, node_id, kind))
    mask_table = ActionMaskTable.from_tsv((directory / "mask.tsv").read_text(),
                                          path=str(directory / "mask.tsv"))
    nodes = {}
    for entry in meta["nodes"]:
        nodes[entry["class"]] = DialogueNode(
            id=entry["class"], kind=entry["kind"],
            texts=tuple(entry["texts"]), hook=entry["hook"])

    bow_vocab = None
    if meta["bow_tokens"] is not None:
        bow_vocab = Vocabulary(meta["bow_tokens"])
    rng = np.random.default_rng(0)  # placeholder weights, replaced by the snapshot
    featurizer = TurnFeaturizer(
        hyper.input_mode, table, rng,
        conv_widths=hyper.conv_widths, conv_filters=hyper.conv_filters,
        conv_keep_prob=hyper.conv_keep_prob, input_rnn_hidden=hyper.input_rnn_hidden,
        input_rnn_keep_prob=hyper.input_rnn_keep_prob,
        input_activation=hyper.input_activation,
        bow_vocab=bow_vocab, sentiment=sentiment, acts=acts)
    model = HcnModel(dialogue_id, inventory, nodes, mask_table, featurizer, hyper, rng)
    model.load_state(read_snapshot(str(directory / "model.bin")))
    model.epochs_used = meta["epochs_used"]
    model.train_report = meta.get("train_report", {})
    return model


class ModelStore:
    """Lazily loads managers from a model root and caches them by dialogue."""

    def __init__(self, root: str | Path, table: EmbeddingTable, *,
                 sentiment: FrozenFeatures | None = None,
                 acts: FrozenFeatures | None = None):
        self.root = Path(root)
        self.table = table
        self.sentiment = sentiment
        self.acts = acts
        self._cache: dict[str, HcnModel] = {}

    def get(self, dialogue_id: str) -> HcnModel:
        model = self._cache.get(dialogue_id)
        if model is None:
            model = load_hcn(self.root, dialogue_id, self.table,
                             sentiment=self.sentiment, acts=self.acts)
            self._cache[dialogue_id] = model
        return model

    def put(self, model: HcnModel) -> Path:
        """Saves and caches a freshly trained manager."""
        path = save_hcn(model, self.root)
        self._cache[model.dialogue_id] = model
        return path

    def ids(self) -> list[str]:
        """Dialogue ids with a saved manager under the root."""
        if not self.root.exists():
            return []
        return sorted(p.name for p in self.root.iterdir() if (p / "meta.json").exists())
