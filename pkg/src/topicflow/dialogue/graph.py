"""Dialogue graph files: schema, parsing, validation, serialization.

A dialogue file is YAML with keys ``id``, ``start`` and ``nodes``, where each
node is ``{kind, texts|hook, next}``. Node kinds and their allowed edges:

    Bot       says one of its texts; successors are User nodes (none = end)
    User      one expected utterance class; successors are Bot/Function, >= 1
    Function  runs a registered hook that names the successor node to emit
              next; successors are Bot/Function nodes (none = end)

Graphs must be acyclic and fully reachable from ``start``: training data is
generated by enumerating every start-to-terminal path.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import yaml

from topicflow.errors import ParseError, ValidationError

NODE_KINDS = ("Bot", "User", "Function")
_ID_RE = re.compile(r"^[A-Za-z0-9_.-]+$")


class _StrictLoader(yaml.SafeLoader):
    pass


def _reject_duplicate_keys(loader, node, deep=False):
    mapping = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if key in mapping:
            raise ParseError(f"duplicate key {key!r}", line=key_node.start_mark.line + 1)
        mapping[key] = loader.construct_object(value_node, deep=deep)
    return mapping


_StrictLoader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _reject_duplicate_keys)


def load_strict_yaml(text: str, path: str | None = None):
    try:
        return yaml.load(text, Loader=_StrictLoader)
    except ParseError as exc:
        raise ParseError(str(exc.args[0]) if exc.args else "bad mapping", path=path) from None
    except yaml.YAMLError as exc:
        line = None
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            line = mark.line + 1
        raise ParseError(f"invalid YAML: {exc}", path=path, line=line) from None


@dataclass(frozen=True)
class DialogueNode:
    id: str
    kind: str
    texts: tuple[str, ...] = ()
    hook: str | None = None
    successors: tuple[str, ...] = ()


@dataclass(frozen=True)
class DialogueGraph:
    id: str
    start: str
    nodes: dict[str, DialogueNode] = field(default_factory=dict)

    def node(self, node_id: str) -> DialogueNode:
        return self.nodes[node_id]


def _expect_map(raw, what: str, path):
    if not isinstance(raw, dict):
        raise ParseError(f"{what} must be a mapping, got {type(raw).__name__}", path=path)
    return raw


def _parse_node(node_id, raw, path) -> DialogueNode:
    if not isinstance(node_id, str) or not _ID_RE.match(node_id):
        raise ParseError(f"bad node id {node_id!r} (letters, digits, _.- only)", path=path)
    raw = _expect_map(raw, f"node {node_id!r}", path)
    kind = raw.get("kind")
    if kind not in NODE_KINDS:
        raise ParseError(f"node {node_id!r}: kind must be one of {NODE_KINDS}, got {kind!r}",
                         path=path)
    unknown = set(raw) - {"kind", "texts", "hook", "next"}
    if unknown:
        raise ParseError(f"node {node_id!r}: unknown keys {sorted(unknown)}", path=path)

    texts: tuple[str, ...] = ()
    hook: str | None = None
    if kind in ("Bot", "User"):
        if "hook" in raw:
            raise ParseError(f"node {node_id!r}: {kind} nodes take texts, not a hook", path=path)
        entries = raw.get("texts")
        if not isinstance(entries, list) or not entries:
            raise ParseError(f"node {node_id!r}: {kind} node needs a non-empty texts list",
                             path=path)
        for t in entries:
            if not isinstance(t, str) or not t.strip():
                raise ParseError(f"node {node_id!r}: texts must be non-empty strings", path=path)
        texts = tuple(entries)
    else:
        if "texts" in raw:
            raise ParseError(f"node {node_id!r}: Function nodes take a hook, not texts",
                             path=path)
        hook = raw.get("hook")
        if not isinstance(hook, str) or not hook.strip():
            raise ParseError(f"node {node_id!r}: Function node needs exactly one hook name",
                             path=path)

    succ = raw.get("next", [])
    if succ is None:
        succ = []
    if not isinstance(succ, list) or not all(isinstance(s, str) for s in succ):
        raise ParseError(f"node {node_id!r}: next must be a list of node ids", path=path)
    return DialogueNode(id=node_id, kind=kind, texts=texts, hook=hook, successors=tuple(succ))


def _find_cycle(graph: DialogueGraph) -> list[str] | None:
    color: dict[str, int] = {}
    stack: list[str] = []

    def visit(node_id: str) -> list[str] | None:
        color[node_id] = 1
        stack.append(node_id)
        for succ in graph.nodes[node_id].successors:
            state = color.get(succ, 0)
            if state == 1:
                return stack[stack.index(succ):] + [succ]
            if state == 0:
                found = visit(succ)
                if found:
                    return found
        stack.pop()
        color[node_id] = 2
        return None

    for node_id in graph.nodes:
        if color.get(node_id, 0) == 0:
            found = visit(node_id)
            if found:
                return found
    return None


_ALLOWED_SUCCESSORS = {
    "Bot": {"User"},
    "User": {"Bot", "Function"},
    "Function": {"Bot", "Function"},
}


def validate_dialogue(graph: DialogueGraph, path: str | None = None) -> None:
    where = f" in dialogue {graph.id!r}"
    if graph.start not in graph.nodes:
        raise ValidationError(f"start node {graph.start!r} does not exist{where}")
    for node in graph.nodes.values():
        for succ in node.successors:
            if succ not in graph.nodes:
                raise ValidationError(
                    f"node {node.id!r} references unknown successor {succ!r}{where}")

    cycle = _find_cycle(graph)
    if cycle:
        raise ValidationError("cycle detected" + where + ": " + " -> ".join(cycle))

    for node in graph.nodes.values():
        for succ in node.successors:
            succ_kind = graph.nodes[succ].kind
            if succ_kind not in _ALLOWED_SUCCESSORS[node.kind]:
                raise ValidationError(
                    f"node {node.id!r} ({node.kind}) may not lead to {succ!r} ({succ_kind})"
                    f"{where}; allowed: {sorted(_ALLOWED_SUCCESSORS[node.kind])}")
        if node.kind == "User" and not node.successors:
            raise ValidationError(
                f"User node {node.id!r} is terminal{where}; dialogues end on Bot or Function")
    if graph.nodes[graph.start].kind == "User":
        raise ValidationError(f"start node {graph.start!r} is a User node{where}")

    reachable = set()
    frontier = [graph.start]
    while frontier:
        node_id = frontier.pop()
        if node_id in reachable:
            continue
        reachable.add(node_id)
        frontier.extend(graph.nodes[node_id].successors)
    unreachable = sorted(set(graph.nodes) - reachable)
    if unreachable:
        raise ValidationError(f"nodes unreachable from start{where}: {unreachable}")


def parse_dialogue(text: str, path: str | None = None) -> DialogueGraph:
    raw = _expect_map(load_strict_yaml(text, path), "dialogue file", path)
    unknown = set(raw) - {"id", "start", "nodes"}
    if unknown:
        raise ParseError(f"unknown top-level keys {sorted(unknown)}", path=path)
    dialogue_id = raw.get("id")
    if not isinstance(dialogue_id, str) or not _ID_RE.match(dialogue_id):
        raise ParseError(f"bad dialogue id {dialogue_id!r}", path=path)
    start = raw.get("start")
    if not isinstance(start, str):
        raise ParseError("missing or non-string start node", path=path)
    nodes_raw = _expect_map(raw.get("nodes"), "nodes", path)
    if not nodes_raw:
        raise ParseError("dialogue needs at least one node", path=path)
    nodes = {nid: _parse_node(nid, node_raw, path) for nid, node_raw in nodes_raw.items()}
    graph = DialogueGraph(id=dialogue_id, start=start, nodes=nodes)
    validate_dialogue(graph, path)
    return graph


def load_dialogue(path: str) -> DialogueGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_dialogue(fh.read(), path=path)


def serialize_dialogue(graph: DialogueGraph) -> str:
    nodes = {}
    for node in graph.nodes.values():
        entry: dict = {"kind": node.kind}
        if node.kind == "Function":
            entry["hook"] = node.hook
        else:
            entry["texts"] = list(node.texts)
        if node.successors:
            entry["next"] = list(node.successors)
        nodes[node.id] = entry
    doc = {"id": graph.id, "start": graph.start, "nodes": nodes}
    return yaml.safe_dump(doc, sort_keys=False, allow_unicode=True)
