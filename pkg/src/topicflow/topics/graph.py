"""Topic nodes and the graph built from a directory of topic files.

One YAML file per topic node: keys ``name``, ``parents``, ``dialogues``,
plus optional ``kind`` (normal, generic_entity, recommendation, detached),
``entities`` and ``intents`` (the annotation values that bind to this
node). Parent edges point from more specific to less specific topics and
must stay acyclic. The special kinds are isolated: they never appear as
parents, generic_entity and detached nodes declare none themselves, and
at most one generic_entity and one recommendation node may exist.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from topicflow.dialogue.graph import load_strict_yaml
from topicflow.errors import ParseError, ValidationError

TOPIC_KINDS = ("normal", "generic_entity", "recommendation", "detached")
GENERIC_KINDS = ("funfact", "showerthought", "news")

_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9 _.-]*$")


@dataclass(frozen=True)
class TopicNode:
    name: str
    kind: str = "normal"
    parents: tuple[str, ...] = ()
    dialogues: tuple[str, ...] = ()
    entities: tuple[str, ...] = ()
    intents: tuple[str, ...] = ()


@dataclass(frozen=True)
class TopicGraph:
    nodes: dict[str, TopicNode] = field(default_factory=dict)
    entity_bindings: dict[str, str] = field(default_factory=dict)
    intent_bindings: dict[str, str] = field(default_factory=dict)

    def _single(self, kind: str) -> TopicNode | None:
        for node in self.nodes.values():
            if node.kind == kind:
                return node
        return None

    @property
    def generic_entity(self) -> TopicNode | None:
        return self._single("generic_entity")

    @property
    def recommendation(self) -> TopicNode | None:
        return self._single("recommendation")


def _string_list(raw, key: str, path: str | None) -> tuple[str, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list) or not all(isinstance(v, str) for v in raw):
        raise ParseError(f"{key} must be a list of strings", path=path)
    return tuple(raw)


def parse_topic_file(text: str, path: str | None = None) -> TopicNode:
    raw = load_strict_yaml(text, path)
    if not isinstance(raw, dict):
        raise ParseError("topic file must be a mapping", path=path)
    unknown = set(raw) - {"name", "kind", "parents", "dialogues", "entities", "intents"}
    if unknown:
        raise ParseError(f"unknown topic keys {sorted(unknown)}", path=path)
    name = raw.get("name")
    if not isinstance(name, str) or not _NAME_RE.match(name):
        raise ParseError(f"bad topic name {name!r}", path=path)
    kind = raw.get("kind", "normal")
    if kind not in TOPIC_KINDS:
        raise ParseError(f"unknown topic kind {kind!r}; expected one of {TOPIC_KINDS}",
                         path=path)
    dialogues = _string_list(raw.get("dialogues"), "dialogues", path)
    if kind == "generic_entity":
        if not dialogues:
            dialogues = GENERIC_KINDS
        bad = [d for d in dialogues if d not in GENERIC_KINDS]
        if bad:
            raise ParseError(
                f"generic_entity dialogues must come from {GENERIC_KINDS}, got {bad}",
                path=path)
    return TopicNode(
        name=name, kind=kind,
        parents=_string_list(raw.get("parents"), "parents", path),
        dialogues=dialogues,
        entities=_string_list(raw.get("entities"), "entities", path),
        intents=_string_list(raw.get("intents"), "intents", path),
    )


def _find_parent_cycle(nodes: dict[str, TopicNode]) -> list[str] | None:
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {name: WHITE for name in nodes}
    stack: list[str] = []

    def visit(name: str) -> list[str] | None:
        color[name] = GRAY
        stack.append(name)
        for parent in nodes[name].parents:
            if color[parent] == GRAY:
                return stack[stack.index(parent):] + [parent]
            if color[parent] == WHITE:
                found = visit(parent)
                if found:
                    return found
        stack.pop()
        color[name] = BLACK
        return None

    for name in nodes:
        if color[name] == WHITE:
            found = visit(name)
            if found:
                return found
    return None


def validate_topic_graph(graph: TopicGraph,
                         known_dialogues: set[str] | None = None) -> None:
    nodes = graph.nodes
    for node in nodes.values():
        for parent in node.parents:
            if parent not in nodes:
                raise ValidationError(
                    f"topic {node.name!r} names unknown parent {parent!r}")

    cycle = _find_parent_cycle(nodes)
    if cycle:
        raise ValidationError("topic parent cycle: " + " -> ".join(cycle))

    for node in nodes.values():
        if node.kind in ("generic_entity", "detached") and node.parents:
            raise ValidationError(
                f"{node.kind} topic {node.name!r} must not declare parents")
        for parent in node.parents:
            if nodes[parent].kind != "normal":
                raise ValidationError(
                    f"topic {node.name!r} uses {nodes[parent].kind} node "
                    f"{parent!r} as a parent; special nodes stay unreachable")

    for kind in ("generic_entity", "recommendation"):
        named = [n.name for n in nodes.values() if n.kind == kind]
        if len(named) > 1:
            raise ValidationError(f"multiple {kind} topics: {sorted(named)}")

    if known_dialogues is not None:
        for node in nodes.values():
            if node.kind == "generic_entity":
                continue  # its "dialogues" are content kinds, not graphs
            for dialogue in node.dialogues:
                if dialogue not in known_dialogues:
                    raise ValidationError(
                        f"topic {node.name!r} references unknown dialogue {dialogue!r}")


def build_topic_graph(topic_nodes: list[TopicNode],
                      known_dialogues: set[str] | None = None) -> TopicGraph:
    nodes: dict[str, TopicNode] = {}
    for node in topic_nodes:
        if node.name in nodes:
            raise ValidationError(f"duplicate topic name {node.name!r}")
        if node.kind == "generic_entity" and not node.dialogues:
            node = replace(node, dialogues=GENERIC_KINDS)
        nodes[node.name] = node
    entity_bindings: dict[str, str] = {}
    intent_bindings: dict[str, str] = {}
    for node in nodes.values():
        for entity_type in node.entities:
            if entity_type in entity_bindings:
                raise ValidationError(
                    f"entity type {entity_type!r} bound to both "
                    f"{entity_bindings[entity_type]!r} and {node.name!r}")
            entity_bindings[entity_type] = node.name
        for intent in node.intents:
            if intent in intent_bindings:
                raise ValidationError(
                    f"intent {intent!r} bound to both "
                    f"{intent_bindings[intent]!r} and {node.name!r}")
            intent_bindings[intent] = node.name
    graph = TopicGraph(nodes=nodes, entity_bindings=entity_bindings,
                       intent_bindings=intent_bindings)
    validate_topic_graph(graph, known_dialogues)
    return graph


def load_topic_graph(directory: str | Path,
                     known_dialogues: set[str] | None = None) -> TopicGraph:
    """Loads every .yaml/.yml file in ``directory`` as one topic node.

    An empty or missing directory yields an empty, valid graph; the engine
    then leans on the GenericEntity and Recommendation fallbacks.
    """
    directory = Path(directory)
    files = sorted(p for p in directory.glob("*.y*ml")) if directory.exists() else []
    parsed = [parse_topic_file(p.read_text(encoding="utf-8"), path=str(p))
              for p in files]
    return build_topic_graph(parsed, known_dialogues)


def reachable_nodes(graph: TopicGraph, start: str) -> list[tuple[str, int]]:
    """Breadth-first walk along parent edges; minimal distances, start at 0."""
    if start not in graph.nodes:
        raise ValidationError(f"unknown topic {start!r}")
    distances = {start: 0}
    queue = [start]
    while queue:
        name = queue.pop(0)
        for parent in graph.nodes[name].parents:
            if parent not in distances:
                distances[parent] = distances[name] + 1
                queue.append(parent)
    return sorted(distances.items(), key=lambda item: (item[1], item[0]))
