"""Training every model a bot needs, from one config.

``train_all`` is what the train-all CLI command runs: it reads the bot's
data files, trains the NLU models, one manager per dialogue, and the
topic-switch detector, then saves everything under the model directory
in the exact layout the engine loads at startup.
"""

from __future__ import annotations

import dataclasses
import time
from pathlib import Path

import numpy as np

from topicflow.dialogue.compile import Transition, compile_transitions
from topicflow.dialogue.graph import DialogueGraph, parse_dialogue
from topicflow.engine.config import EngineConfig
from topicflow.engine.runtime import EMBEDDINGS_FILE, _sentiment_features
from topicflow.errors import ConfigurationError, ValidationError
from topicflow.hcn.features import classifier_features
from topicflow.hcn.store import ModelStore
from topicflow.hcn.train import train_hcn
from topicflow.nlu.classifier import ClassifierConfig, train_classifier
from topicflow.nlu.data import (
    TagSet, read_entity_data, read_labeled_lines, read_sentiment_data)
from topicflow.nlu.entity import train_entity
from topicflow.nlu.sentiment import SentimentConfig, train_sentiment
from topicflow.nlu.tokenize import tokenize
from topicflow.switch.dataset import generate_switch_dataset, save_switch_dataset
from topicflow.switch.model import save_switch, train_switch
from topicflow.tensor.vocab import (
    EmbeddingTable, Vocabulary, load_embeddings, write_embeddings)
from topicflow.topics.content import ContentStore

# Rough floor for the switch corpus; transition walks are repeated (with
# fresh mixing draws each pass) until the corpus reaches this size.
_SWITCH_CORPUS_FLOOR = 320


def load_dialogue_graphs(directory: str | Path) -> dict[str, DialogueGraph]:
    """Parses every dialogue file in a directory, keyed by dialogue id."""
    paths = sorted(Path(directory).glob("*.y*ml"))
    if not paths:
        raise ConfigurationError(f"no dialogue files under {directory}")
    graphs: dict[str, DialogueGraph] = {}
    for path in paths:
        graph = parse_dialogue(path.read_text(encoding="utf-8"),
                               path=str(path))
        if graph.id in graphs:
            raise ValidationError(
                f"{path}: duplicate dialogue id {graph.id!r}")
        graphs[graph.id] = graph
    return graphs


def _bot_texts(config: EngineConfig, graphs: dict[str, DialogueGraph],
               intent_pairs, entity_examples, act_pairs,
               sentiment_pairs) -> list[str]:
    """Every text the bot may ever embed, for the fallback vocabulary."""
    texts: list[str] = []
    for graph in graphs.values():
        for node in graph.nodes.values():
            texts.extend(node.texts)
    texts.extend(text for text, _ in intent_pairs)
    texts.extend(" ".join(tokens) for tokens, _ in entity_examples)
    if act_pairs:
        texts.extend(text for text, _ in act_pairs)
    if sentiment_pairs:
        texts.extend(text for _, text in sentiment_pairs)
    if config.content:
        texts.extend(item.text for item in ContentStore.load(config.content).items)
    texts.append(config.recommendation_prompt)
    return texts


def train_all(config: EngineConfig, *, log=None) -> dict:
    """Trains and saves every model; returns a summary of what was built."""
    say = log if log is not None else (lambda message: None)
    started = time.monotonic()
    models = Path(config.models)
    models.mkdir(parents=True, exist_ok=True)

    graphs = load_dialogue_graphs(config.dialogues)
    transitions: dict[str, list[Transition]] = {
        gid: compile_transitions(graph) for gid, graph in graphs.items()}

    intent_pairs = read_labeled_lines(str(config.data.intents))
    tagset = TagSet(config.data.entity_types)
    entity_examples = read_entity_data(str(config.data.entities), tagset)
    act_pairs = (read_labeled_lines(str(config.data.acts))
                 if config.data.acts else None)
    sentiment_pairs = (read_sentiment_data(str(config.data.sentiment))
                       if config.data.sentiment else None)

    if config.embeddings:
        table = load_embeddings(str(config.embeddings))
    else:
        corpus = _bot_texts(config, graphs, intent_pairs, entity_examples,
                            act_pairs, sentiment_pairs)
        vocab = Vocabulary.from_corpus(tokenize(text) for text in corpus)
        table = EmbeddingTable.random(vocab, config.embed_dim,
                                      np.random.default_rng(config.seed))
    write_embeddings(table, models / EMBEDDINGS_FILE)
    say(f"embeddings: {len(table.vocab)} tokens, dim {table.dim}")

    intent_model = train_classifier(intent_pairs,
                                    ClassifierConfig(seed=config.seed))
    intent_model.save(str(models / "intent"))
    say(f"intent classifier: {len(intent_pairs)} examples, "
        f"{len(intent_model.labels)} labels")

    entity_model = train_entity(
        entity_examples, tagset,
        dataclasses.replace(config.entity, seed=config.seed))
    entity_model.save(str(models / "entity"))
    say(f"entity tagger: {len(entity_examples)} sentences, "
        f"types {', '.join(tagset.types)}")

    acts_model = None
    if act_pairs:
        acts_model = train_classifier(act_pairs,
                                      ClassifierConfig(seed=config.seed))
        acts_model.save(str(models / "acts"))
        say(f"dialogue-act classifier: {len(act_pairs)} examples")

    sentiment_model = None
    if sentiment_pairs:
        sentiment_model = train_sentiment(sentiment_pairs,
                                          SentimentConfig(seed=config.seed))
        sentiment_model.save(str(models / "sentiment"))
        say(f"sentiment model: {len(sentiment_pairs)} examples")

    sentiment_features = _sentiment_features(sentiment_model)
    act_features = (classifier_features("acts", acts_model)
                    if acts_model else None)
    store = ModelStore(models / "dialogues", table,
                       sentiment=sentiment_features, acts=act_features)
    for gid in sorted(graphs):
        manager = train_hcn(transitions[gid], config.hcn, seed=config.seed,
                            graph=graphs[gid], table=table,
                            sentiment=sentiment_features, acts=act_features)
        store.put(manager)
        say(f"dialogue {gid}: {len(transitions[gid])} transitions, "
            f"{len(manager.classes)} response classes, "
            f"{manager.epochs_used} epochs")

    flat = [t for gid in sorted(transitions) for t in transitions[gid]]
    per_pass = sum(len(t.steps) for t in flat)
    repeats = max(1, -(-_SWITCH_CORPUS_FLOOR // max(per_pass, 1)))
    corpus_rng = np.random.default_rng(
        np.random.SeedSequence((config.seed, 9)))
    dataset = generate_switch_dataset(
        flat * repeats, [text for text, _ in intent_pairs],
        config.mix_rate, corpus_rng, graphs=graphs)
    save_switch_dataset(dataset, models / "switch_corpus.tsv")
    switch_model = train_switch(dataset, config.switch, seed=config.seed,
                                table=table)
    save_switch(switch_model, models / "switch")
    say(f"switch detector: {len(dataset)} examples "
        f"({sum(e.label for e in dataset)} switches)")

    elapsed = time.monotonic() - started
    say(f"done in {elapsed:.1f}s")
    return {
        "dialogues": sorted(graphs),
        "intent_examples": len(intent_pairs),
        "entity_examples": len(entity_examples),
        "switch_examples": len(dataset),
        "seconds": elapsed,
    }
