"""Compiling dialogue graphs into training artifacts.

A graph yields three things the dialogue manager trains and serves from:

  * a response inventory: the Bot and Function nodes, in file order, each a
    response class of its own (Bot text variants share their node's class);
  * transitions: every start-to-terminal path, expanded over User text
    variants, as (user utterance, gold class) steps plus the node path;
  * an action-mask table: for each class, which classes may follow it.

A class B is permitted after class A exactly when the graph contains a path
from A to B whose interior nodes are all User or Function nodes; Function
nodes are passed through because running one emits its successor without a
fresh user turn. The reserved start state permits only the start node.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from topicflow.dialogue.graph import DialogueGraph
from topicflow.errors import ParseError, ValidationError

START_STATE = "<start>"


@dataclass(frozen=True)
class Transition:
    dialogue_id: str
    steps: tuple[tuple[str, str], ...]
    path: tuple[str, ...]


@dataclass(frozen=True)
class ActionMaskTable:
    classes: tuple[str, ...]
    rows: dict[str, np.ndarray] = field(default_factory=dict)

    def row(self, state: str) -> np.ndarray:
        return self.rows[state]

    def permitted(self, state: str) -> list[str]:
        mask = self.rows[state]
        return [cls for cls, bit in zip(self.classes, mask) if bit]

    def index(self, class_id: str) -> int:
        return self.classes.index(class_id)

    def to_tsv(self) -> str:
        lines = ["state\t" + "\t".join(self.classes)]
        for state in (START_STATE, *self.classes):
            bits = "\t".join(str(int(b)) for b in self.rows[state])
            lines.append(f"{state}\t{bits}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str, path: str | None = None) -> "ActionMaskTable":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ParseError("empty mask table", path=path)
        header = lines[0].split("\t")
        if header[:1] != ["state"]:
            raise ParseError("mask table header must start with 'state'", path=path)
        classes = tuple(header[1:])
        rows: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(lines[1:], start=2):
            cells = line.split("\t")
            if len(cells) != len(classes) + 1:
                raise ParseError(f"expected {len(classes) + 1} cells", path=path, line=lineno)
            rows[cells[0]] = np.array([float(int(c)) for c in cells[1:]])
        expected = {START_STATE, *classes}
        if set(rows) != expected:
            raise ParseError("mask table rows do not cover start plus every class", path=path)
        return cls(classes=classes, rows=rows)


def response_inventory(graph: DialogueGraph) -> list[tuple[str, str, str]]:
    """(class id, node id, kind) rows for every Bot/Function node, file order."""
    return [(node.id, node.id, node.kind)
            for node in graph.nodes.values() if node.kind in ("Bot", "Function")]


def _enumerate_paths(graph: DialogueGraph) -> list[list[str]]:
    paths: list[list[str]] = []
    stack: list[str] = []

    def walk(node_id: str) -> None:
        stack.append(node_id)
        successors = graph.nodes[node_id].successors
        if not successors:
            paths.append(list(stack))
        else:
            for succ in successors:
                walk(succ)
        stack.pop()

    walk(graph.start)
    return paths


def compile_transitions(graph: DialogueGraph) -> list[Transition]:
    """Expands every start-to-terminal path over its User nodes' text variants.

    Each step pairs one User utterance variant with the class of the node the
    graph visits right after that User node. Paths come out in depth-first
    file order; variant combinations vary the last User node fastest.
    """
    transitions: list[Transition] = []
    for path in _enumerate_paths(graph):
        user_positions = [i for i, nid in enumerate(path) if graph.nodes[nid].kind == "User"]
        variant_lists = [graph.nodes[path[i]].texts for i in user_positions]
        for combo in itertools.product(*variant_lists):
            steps = tuple((combo[k], path[pos + 1]) for k, pos in enumerate(user_positions))
            transitions.append(Transition(dialogue_id=graph.id, steps=steps, path=tuple(path)))
    return transitions


def derive_action_masks(graph: DialogueGraph) -> ActionMaskTable:
    classes = tuple(cls for cls, _, _ in response_inventory(graph))
    class_pos = {cls: i for i, cls in enumerate(classes)}
    rows: dict[str, np.ndarray] = {}

    def reachable_classes(node_id: str) -> np.ndarray:
        row = np.zeros(len(classes))
        seen = set()
        frontier = list(graph.nodes[node_id].successors)
        while frontier:
            nid = frontier.pop()
            if nid in seen:
                continue
            seen.add(nid)
            node = graph.nodes[nid]
            if node.kind in ("Bot", "Function"):
                row[class_pos[nid]] = 1.0
            if node.kind != "Bot":  # stop at Bot nodes: they need a new turn
                frontier.extend(node.successors)
        return row

    for cls in classes:
        rows[cls] = reachable_classes(cls)
    start_row = np.zeros(len(classes))
    start_row[class_pos[graph.start]] = 1.0
    rows[START_STATE] = start_row
    return ActionMaskTable(classes=classes, rows=rows)


def replay_states(transition: Transition, graph: DialogueGraph) -> list[tuple[str, str]]:
    """(mask state, gold class) per step, following the recorded path.

    The mask state for a step is the last response class realized before the
    user spoke: the start sentinel before the first turn, then the class the
    previous turn settled on after any Function pass-through.
    """
    pairs: list[tuple[str, str]] = []
    state = START_STATE
    for i, node_id in enumerate(transition.path):
        node = graph.nodes[node_id]
        if node.kind == "User":
            pairs.append((state, transition.path[i + 1]))
        else:
            state = node_id
    return pairs


def verify_replay(transitions: list[Transition], graph: DialogueGraph,
                  table: ActionMaskTable) -> None:
    """Asserts no transition ever steps onto a masked class."""
    for tr in transitions:
        for state, gold in replay_states(tr, graph):
            if not table.rows[state][table.index(gold)]:
                raise ValidationError(
                    f"dialogue {graph.id!r}: gold class {gold!r} is masked after {state!r}")
